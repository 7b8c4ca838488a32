#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "selc/dataio.hpp"
#include "selc/models.hpp"
#include "selc/scores.hpp"

namespace selc {

// Versioned line-oriented text records. Every number is written with the
// shortest round-trip decimal, so save/load is exact. Lines starting with
// '#' are comments; writers put provenance (tool version, seed, config hash)
// there and readers skip them.
//
//   selc-model 1              selc-score 1
//   kind LR                   kind SELE
//   labels 3                  base_kind LR
//   dim 4                     ...same body as a model...
//   reg_const 10
//   gap 0.0009
//   iterations 57
//   rows 3
//   w <dim numbers>           (one line per row)
//   b <numbers>
//   normalizer_mean <dim numbers>   (optional pair)
//   normalizer_std <dim numbers>
//   end

inline constexpr int kModelFormatVersion = 1;

struct StoredClassifier {
  TrainedClassifier model;
  std::optional<Normalizer> normalizer;
};

struct StoredScore {
  UncertaintyScore score;
  std::optional<Normalizer> normalizer;
};

void save_classifier(std::ostream& out, const TrainedClassifier& model,
                     const Normalizer* normalizer = nullptr,
                     const std::vector<std::string>& comments = {});

/// Throws ParseError on malformed records, including unsupported versions.
StoredClassifier load_classifier(std::istream& in);

void save_score(std::ostream& out, const UncertaintyScore& score,
                const Normalizer* normalizer = nullptr,
                const std::vector<std::string>& comments = {});

StoredScore load_score(std::istream& in);

}  // namespace selc
