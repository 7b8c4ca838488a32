// Writes the bundled synthetic datasets. In each of them the label noise
// depends on a feature that does not move the class boundary, so a score
// that reads that feature can rank errors better than the classifier's own
// margin or posterior.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "selc/core.hpp"
#include "selc/text_format.hpp"

namespace fs = std::filesystem;

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

std::ofstream open(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_manifest(const fs::path& dir, const std::string& name, const std::string& source,
                    const std::string& format, int ordinal_bins) {
  auto out = open(dir / (name + ".json"));
  out << "{\n"
      << "  \"name\": \"" << name << "\",\n"
      << "  \"source\": \"" << source << "\",\n"
      << "  \"format\": \"" << format << "\",\n"
      << "  \"label_column\": -1,\n"
      << "  \"ratios\": [30, 10, 30, 10, 20],\n"
      << "  \"seed\": 1,\n"
      << "  \"replicates\": 5,\n"
      << "  \"ordinal_bins\": " << ordinal_bins << "\n"
      << "}\n";
}

/// Three Gaussian classes in (x1, x2); x3 drives the flip rate, x4 is noise.
void blobs(const fs::path& dir, std::size_t n, selc::Rng& rng) {
  const double centers[3][2] = {{0.0, 0.0}, {2.5, 0.0}, {1.25, 2.2}};
  auto out = open(dir / "synth_blobs.csv");
  out << "x1,x2,x3,x4,label\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<int>(rng.below(3));
    const double x1 = centers[y][0] + 0.7 * rng.normal();
    const double x2 = centers[y][1] + 0.7 * rng.normal();
    const double x3 = rng.uniform(-2.0, 2.0);
    const double x4 = rng.normal();
    int label = y;
    if (rng.uniform() < 0.6 * logistic(2.5 * x3 - 1.0)) {
      label = (y + 1 + static_cast<int>(rng.below(2))) % 3;
    }
    out << selc::format_double(x1) << ',' << selc::format_double(x2) << ','
        << selc::format_double(x3) << ',' << selc::format_double(x4) << ',' << (label + 1) << '\n';
  }
  write_manifest(dir, "synth_blobs", "synth_blobs.csv", "csv", 0);
}

/// Two classes separated along x1; x4 drives the flip rate.
void binary(const fs::path& dir, std::size_t n, selc::Rng& rng) {
  auto out = open(dir / "synth_binary.libsvm");
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = rng.uniform() < 0.5;
    double x[5];
    x[0] = (positive ? 1.0 : -1.0) + 0.8 * rng.normal();
    x[1] = rng.normal();
    x[2] = 0.5 * x[0] + rng.normal();
    x[3] = rng.uniform(-2.0, 2.0);
    x[4] = rng.normal();
    bool label = positive;
    if (rng.uniform() < 0.45 * logistic(3.0 * x[3] - 1.5)) label = !label;
    out << (label ? "+1" : "-1");
    for (int j = 0; j < 5; ++j) out << ' ' << (j + 1) << ':' << selc::format_double(x[j]);
    out << '\n';
  }
  write_manifest(dir, "synth_binary", "synth_binary.libsvm", "libsvm", 0);
}

/// Continuous target t = 2 x1 + x2 plus noise whose scale grows with x3;
/// the manifest bins it into four ordinal labels.
void ordinal(const fs::path& dir, std::size_t n, selc::Rng& rng) {
  auto out = open(dir / "synth_ordinal.csv");
  out << "x1,x2,x3,target\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = rng.normal();
    const double x2 = rng.normal();
    const double x3 = rng.uniform(0.0, 2.0);
    const double t = 2.0 * x1 + x2 + (0.1 + 1.2 * x3) * rng.normal();
    out << selc::format_double(x1) << ',' << selc::format_double(x2) << ','
        << selc::format_double(x3) << ',' << selc::format_double(t) << '\n';
  }
  write_manifest(dir, "synth_ordinal", "synth_ordinal.csv", "csv", 4);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: selc_synth <output-dir>\n";
    return 2;
  }
  try {
    const fs::path dir(argv[1]);
    fs::create_directories(dir);
    selc::Rng rng(20240517);
    blobs(dir, 1500, rng);
    binary(dir, 1500, rng);
    ordinal(dir, 800, rng);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  }
  return 0;
}
