#pragma once

#include <string>

#include <Eigen/Dense>

#include <expred/exponential_sum.hpp>
#include <expred/hankel_oracle.hpp>
#include <expred/prony.hpp>
#include <expred/reduction.hpp>

namespace expred::io
{

/// Formats a double with 17 significant digits (binary64 round-trip exact).
std::string format_double(double v);

///
/// \brief Model serialization: {"terms": [{"a": [re, im], "z": [re, im]}, ...]}.
///
/// Field order and float formatting are fixed, so identical models produce
/// byte-identical text.
///
std::string write_model_json(const ExponentialSum& sum);

/// Parses the model JSON produced by write_model_json.  Throws
/// std::invalid_argument on malformed text or invalid model data.
ExponentialSum read_model_json(const std::string& text);

/// Sample serialization: header "k,re,im", one row per sample.
std::string write_samples_csv(const SampleSequence& samples);

/// Parses the sample CSV produced by write_samples_csv.  Throws
/// std::invalid_argument on malformed text.
SampleSequence read_samples_csv(const std::string& text);

/// Bare JSON array of the singular values, descending.
std::string write_spectrum_json(const Eigen::VectorXd& sigmas);

///
/// \brief Reduction serialization:
/// {"K":…, "sigma_K":…, "roots":[[re,im],…], "reduced":{…}, "error_l2":…,
///  "bound_satisfied":…, "unchanged":…}.
///
std::string write_reduction_json(const ReductionResult& result);

/// Verification serialization with the report's five fields.
std::string write_verification_json(const VerificationReport& report);

/// Recovery diagnostics: estimated order, singular-value profile, fit
/// residual, and the weight-system condition estimate.
std::string write_recovery_diagnostics_json(const RecoveryDiagnostics& diagnostics);

}  // namespace expred::io
