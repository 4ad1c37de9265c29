#pragma once

#include <string>
#include <vector>

/// Operator surface: gen-data, judge, eval, aggregate, reward-serve.
namespace judgekit::cli {

int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without argv[0]

}  // namespace judgekit::cli
