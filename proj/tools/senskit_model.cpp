// Adapter exposing the builtin benchmark models through the external-model
// protocol: a design CSV (header plus rows) arrives on standard input, one
// response per row leaves on standard output. Example:
//
//   senskit evaluate --design design.csv --exec "senskit_model polynomial"

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "senskit/errors.hpp"
#include "senskit/testbed.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: senskit_model <polynomial|ishigami|linear_gaussian|"
                 "additive_uniform|sine_hetero> [d] \n";
    return 2;
  }
  try {
    senskit::BenchmarkOptions opts;
    if (argc >= 3) opts.d = std::atoi(argv[2]);
    const auto model = senskit::BenchmarkModel::by_name(argv[1], opts);

    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(std::cin, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::vector<double> row;
      bool numeric = true;
      while (std::getline(ss, cell, ',')) {
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0') {
          numeric = false;
          break;
        }
        row.push_back(v);
      }
      if (first && !numeric) {  // header row
        first = false;
        continue;
      }
      first = false;
      if (!numeric) {
        std::cerr << "senskit_model: malformed row: " << line << '\n';
        return 2;
      }
      rows.push_back(std::move(row));
    }

    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), model.dimension());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(rows[i].size()) != model.dimension()) {
        std::cerr << "senskit_model: row has wrong column count\n";
        return 2;
      }
      for (int j = 0; j < model.dimension(); ++j) {
        x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
      }
    }
    const Eigen::VectorXd y = model.eval(x);
    char buf[40];
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", y(i));
      std::cout << buf << '\n';
    }
  } catch (const senskit::Error& e) {
    std::cerr << "senskit_model: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
