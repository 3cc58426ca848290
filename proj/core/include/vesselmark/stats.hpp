#pragma once

#include <cstddef>
#include <span>

namespace vm {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1); 0 when n < 2
  double median = 0.0;
  double p95 = 0.0;  // linear interpolation between order statistics
  double max = 0.0;
};

Summary summarize(std::span<const double> values);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees
// of freedom.
double student_t_two_sided_p(double t, double df);

struct PairedTestResult {
  double t = 0.0;
  int df = 0;
  double p_two_sided = 1.0;
  double mean_diff = 0.0;
  double sd_diff = 0.0;
  // Differences all equal and non-zero: t is infinite and p is reported as 0.
  bool degenerate = false;
};

// Paired t-test on a - b. Errors: LengthMismatch (different sizes or n < 2),
// Undefined when every difference is zero.
PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace vm
