#pragma once

#include <string>
#include <vector>

namespace vdib {

struct CheckResult {
  std::string name;
  bool pass = false;
  double max_err = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

// Readout eligibilities vs centered finite differences of the step
// log-likelihood, for every parameter class (w_ij,k, w_i, wbar_i).
// inject_error perturbs the eligibility values before the comparison; test
// fixtures use it to confirm the check actually bites.
CheckResult check_readout_gradients(int n_instances = 20,
                                    double tolerance = 1e-6,
                                    double inject_error = 0.0);

// Decoder backprop vs finite differences, both model kinds x 3 likelihoods.
CheckResult check_decoder_gradients(int instances_per_combo = 20,
                                    double tolerance = 1e-6);

// sum_y exp(sequence_log_prob(y)) == 1 on enumerable instances.
CheckResult check_normalization(double tolerance = 1e-10);

// Enumerated expectation of the episodic single-sample encoder gradient
// vs the exact gradient of the enumerated expected loss.
CheckResult check_reinforce_unbiasedness(int n_instances = 10,
                                         double tolerance = 1e-8);

// Enumerated expectation of the encoder loss vs the exact KL, plus
// nonnegativity.
CheckResult check_kl_consistency(double tolerance = 1e-9);

// AR trace recursions vs direct convolution with their impulse responses.
CheckResult check_ar_convolution_equivalence(double tolerance = 1e-9);

std::vector<CheckResult> run_verification(const std::string& scope = "all");

}  // namespace vdib
