/*
 * Copyright 2026 The ddcx authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DDCX_CLI_HPP
#define DDCX_CLI_HPP

namespace ddcx::cli {

//! Runs the ddcx command line: reads a raw-byte text, builds its suffix
//! array on the simulated runtime, writes the SA and a metrics report,
//! optionally verifies. Exit codes: 0 ok, 1 verification failed,
//! 2 usage/config error, 3 I/O error.
int run(int argc, const char* const* argv);

} // namespace ddcx::cli

#endif // DDCX_CLI_HPP
