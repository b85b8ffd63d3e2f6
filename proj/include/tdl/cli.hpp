#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tdl::cli {

// Exit codes: 0 success, 1 usage error, 2 domain/convergence error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::vector<std::string> command_names();

// %.17g; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> comments;  // lines starting with '#', without the marker
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

}  // namespace tdl::cli
