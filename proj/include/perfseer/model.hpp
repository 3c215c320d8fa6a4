#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "perfseer/features.hpp"

namespace perfseer {

/// Model expression AST: parameters (p_*), features (f_*), rational
/// literals, + - * /, and tanh. Differentiable with respect to every
/// parameter by construction.
struct MExpr;
using MExprPtr = std::shared_ptr<const MExpr>;

struct MExpr {
  enum class Kind { number, param, feature, add, sub, mul, div, tanh_fn };
  Kind kind;
  double number = 0.0;
  size_t index = 0;  // param or feature index within the owning Model
  MExprPtr lhs, rhs, arg;

  static MExprPtr make_number(double v);
  static MExprPtr make_param(size_t i);
  static MExprPtr make_feature(size_t i);
  static MExprPtr make_binary(Kind k, MExprPtr l, MExprPtr r);
  static MExprPtr make_tanh(MExprPtr a);
};

/// A user-defined cost model: output feature (wall time), expression over
/// features and parameters, both in first-occurrence order.
struct Model {
  FeatureSpec output;
  std::string output_id;
  MExprPtr expr;
  std::string expr_src;
  std::vector<std::string> params;
  std::vector<FeatureSpec> features;
  std::vector<std::string> feature_ids;
};

/// Parses a model from its output feature id and expression source. The
/// sstep(x; p_edge) macro expands to (tanh(p_edge*x)+1)/2.
Model parse_model(const std::string& output_id, const std::string& expr_src);

double eval_model(const Model& m, const std::vector<double>& params,
                  const std::vector<double>& features);

/// Symbolic partial derivative with respect to parameter i; feature
/// references are constants.
MExprPtr differentiate(const Model& m, size_t param_index);

/// Rows of the calibration problem: input feature values and the measured
/// output t for one measurement kernel.
struct CalibrationRow {
  std::vector<double> features;
  double output;
};

struct CalibrationProblem {
  std::vector<CalibrationRow> rows;
  bool scaled = false;
};

/// Divides each row's input features by its output and sets outputs to 1,
/// so residuals measure relative error. Zero outputs are errors.
CalibrationProblem scale_features_by_output(const CalibrationProblem& p);

struct FitOptions {
  double lambda0 = 1e-3;
  double lambda_decrease = 0.1;
  double lambda_increase = 10.0;
  double step_tol = 1e-10;
  double grad_tol = 1e-10;
  int max_iterations = 200;
  bool nonnegative = false;  // clamp cost parameters via projected steps
  std::vector<double> initial;  // empty: derived initial point
};

struct CalibratedModel {
  Model model;
  std::map<std::string, double> param_values;
  double residual_norm = 0.0;           // on the rows as fitted
  double residual_norm_unscaled = -1.0; // recomputed on unscaled rows when scaling was used
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;    // e.g. negative cost parameters
  std::string measurement_hash;

  std::vector<double> param_vector() const;
  std::string to_json_string() const;
  static CalibratedModel from_json_string(const std::string& text);
};

/// Levenberg-Marquardt least squares over the model parameters. Damping
/// starts at 1e-3, shrinks 10x on accepted steps and grows 10x on rejected
/// ones; stops on relative step < 1e-10, gradient max-norm < 1e-10, or 200
/// iterations. The default initial point solves the linearized model
/// (tanh replaced by 1) for cost parameters and sets step-sharpness
/// parameters (those appearing only inside tanh) to 1, falling back to
/// all-ones. Deterministic given the rows and initial point.
CalibratedModel fit_model(const Model& m, const CalibrationProblem& problem,
                          const FitOptions& options = {});

/// Predicted output-feature value (seconds) for a kernel at bindings.
double predict(const CalibratedModel& cm, const Kernel& k,
               const std::map<std::string, long long>& bindings, int sub_group_size = 32);

/// Model file format: line 1 the output feature id, remaining lines the
/// expression (concatenated).
Model parse_model_file(const std::string& text);
std::string model_file_text(const Model& m);

}  // namespace perfseer
