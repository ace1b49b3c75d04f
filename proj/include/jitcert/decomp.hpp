#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

#include "jitcert/interval.hpp"
#include "jitcert/model.hpp"

namespace jitcert::decomp {

/// Deviation-term families: one per actuator (U), one per sensor (Y), and
/// one per actuator-sensor pair (UY), each a function of a single scalar
/// timing quantity.
enum class Kind { kActuator, kSensor, kActuatorSensor };

struct ChannelId {
  Kind kind;
  int i = 0;  // actuator index (U, UY), 0-based
  int j = 0;  // sensor index (Y, UY), 0-based

  friend bool operator==(const ChannelId&, const ChannelId&) = default;
};

/// Constant factors of a deviation generator in the common form
///   dA(tau) = M1 (e^{A_cont * sign * tau} - I) M2.
struct FactorForm {
  Eigen::MatrixXd M1;
  Eigen::MatrixXd M2;
  double sign;  // -1 for actuator terms, +1 otherwise
};

/// Splitting of the one-period transition matrix into the nominal matrix
/// plus per-channel deviation generators:
///   A(dt) = A(0) + sum_i dA_u_i(dt_u_i) + sum_j dA_y_j(dt_y_j)
///           + sum_ij dA_uy_ij(dt_y_j - dt_u_i).
class Decomposition {
 public:
  explicit Decomposition(model::ClosedLoopSystem sys);

  const model::ClosedLoopSystem& system() const { return sys_; }
  const Eigen::MatrixXd& nominal() const { return nominal_; }
  const std::vector<ChannelId>& channels() const { return channels_; }

  FactorForm factor_form(const ChannelId& id) const;

  // Generator value; tau is the channel's scalar argument. The UY family
  // is exactly zero for tau <= 0.
  Eigen::MatrixXd deviation(const ChannelId& id, double tau) const;

  // Nominal plus all deviation terms for a timing vector
  // [dt_u_1..dt_u_m, dt_y_1..dt_y_p].
  Eigen::MatrixXd sum(const Eigen::VectorXd& timing) const;

  // Worst-case scalar argument of a channel given the system's timing
  // windows: max(|lo|,|hi|) for U/Y, max(0, hi_y - lo_u) for UY.
  double delta_max(const ChannelId& id) const;

 private:
  model::ClosedLoopSystem sys_;
  Eigen::MatrixXd e_ctrl_;
  Eigen::MatrixXd e_half_;         // e^{A_cont T/2}
  Eigen::MatrixXd m1_u_;           // E_ctrl e^{A_cont T/2}, shared by all U
  std::vector<Eigen::MatrixXd> eu_delta_;  // E_u_i - I
  std::vector<Eigen::MatrixXd> ey_delta_;  // E_y_j - I
  Eigen::MatrixXd nominal_;
  std::vector<ChannelId> channels_;
};

inline Decomposition decompose(const model::ClosedLoopSystem& sys) {
  return Decomposition(sys);
}

/// Rank-one factorization M = col * row (column times row vector), kept in
/// interval form. Every deviation factor that touches a single event matrix
/// has this shape, which admits exact spectral norms in O(n^2).
struct RankOne {
  iv::IntervalMatrix col;  // n x 1
  iv::IntervalMatrix row;  // 1 x n
};

/// Verified counterparts used by the certificate pipeline. The exponential
/// factors are enclosed through the structured matrix exponential; event
/// matrices are exact.
struct VerifiedFactors {
  iv::IntervalMatrix M1;
  iv::IntervalMatrix M2;
  Eigen::MatrixXd A_signed;  // A_cont with the generator's sign folded in
  std::optional<RankOne> m1_rank1;
  std::optional<RankOne> m2_rank1;
};

iv::IntervalMatrix nominal_enclosure(const model::ClosedLoopSystem& sys);
VerifiedFactors verified_factors(const model::ClosedLoopSystem& sys,
                                 const ChannelId& id);

/// All verified factors of a system, sharing one enclosure of e^{A_cont T/2}
/// across channels.
class VerifiedDecomposition {
 public:
  explicit VerifiedDecomposition(const model::ClosedLoopSystem& sys);

  const iv::IntervalMatrix& nominal() const { return nominal_; }
  const std::vector<ChannelId>& channels() const { return channels_; }
  const VerifiedFactors& factors(size_t channel_index) const {
    return factors_[channel_index];
  }
  const Eigen::MatrixXd& a_cont() const { return a_cont_; }

 private:
  std::vector<ChannelId> channels_;
  std::vector<VerifiedFactors> factors_;
  iv::IntervalMatrix nominal_;
  Eigen::MatrixXd a_cont_;
};

}  // namespace jitcert::decomp
