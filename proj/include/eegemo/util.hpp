#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eegemo {

// Thrown when an input file or intermediate data fails validation.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a config file (experiment or synthetic spec) is malformed.
// The CLI maps this to exit code 2; everything else exits 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runtime failure inside the pipeline, annotated with the stage that
// raised it and (when applicable) the fold being processed.
struct PipelineError : std::runtime_error {
  PipelineError(const std::string& stage, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what) {}
  PipelineError(const std::string& stage, const std::string& fold, const std::string& what)
      : std::runtime_error("[" + stage + " fold=" + fold + "] " + what) {}
};

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

// Strict double parser; the whole token must be consumed.
double parse_double(std::string_view token, const std::string& context);

std::vector<std::string> split_csv_line(const std::string& line);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace eegemo
