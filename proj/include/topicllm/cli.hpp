#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "topicllm/llm_gateway.hpp"

namespace topicllm::cli {

/// Runs one subcommand. `args` excludes the program name. Returns the exit
/// code: 0 success, 1 usage or config error, 2 terminal provider error,
/// 3 data validation error. Results go to `out`, diagnostics and logs to
/// `err`.
///
/// `backend`, when given, replaces the backend the config would build; tests
/// use it to drive the CLI with a scripted mock.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err, std::shared_ptr<llm::Backend> backend = nullptr);

}  // namespace topicllm::cli
