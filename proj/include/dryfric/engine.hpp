#pragma once

// Fixed-step integration of a MechanicalModel with contact-mode switching.
//
// Within a step the contact modes are frozen. Event functions (slip speed
// minus stick_eps, normal reactions, stick ratio, gaps of free contacts and
// model events) are compared at the step ends; a downward crossing is
// bracketed by bisection to event_tol, the state is advanced to the left
// end of the bracket and the modes are switched there.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dryfric/core_types.hpp"
#include "dryfric/multiplier_solver.hpp"

namespace dryfric {

enum class Integrator { kRK4, kMidpoint };

struct IntegrationConfig {
  double dt = 1e-4;
  double t_end = 1.0;
  double stick_eps = 1e-6;
  double event_tol = 1e-8;
  Integrator method = Integrator::kRK4;
  double singularity_tol = kDefaultSingularityTol;
  double drift_limit = 1e-6;
  /// Record every n-th step (event points and the final state are always
  /// recorded).
  std::size_t sample_every = 1;

  void validate() const {
    detail::require(dt > 0.0 && std::isfinite(dt), "IntegrationConfig: dt must be > 0");
    detail::require(t_end >= 0.0 && std::isfinite(t_end),
                    "IntegrationConfig: t_end must be >= 0");
    detail::require(stick_eps > 0.0, "IntegrationConfig: stick_eps must be > 0");
    detail::require(event_tol > 0.0 && event_tol < dt,
                    "IntegrationConfig: need 0 < event_tol < dt");
    detail::require(singularity_tol > 0.0 && drift_limit > 0.0,
                    "IntegrationConfig: tolerances must be positive");
    detail::require(sample_every >= 1, "IntegrationConfig: sample_every >= 1");
  }
};

struct TrajectorySample {
  GeneralizedState state;
  Vector lambdas;  // one per contact, 0 when free
  std::vector<ContactMode> modes;
  double total_friction_power = 0.0;  // (F, v)
  std::vector<double> contact_powers; // (F_c, v_c) per contact
  std::map<std::string, double> invariant_values;
  double energy = 0.0;  // kinetic + potential
};

/// Events detected at one instant, e.g. "table:stick", "cushion:release",
/// "spin_exhausted", "floor:impact".
struct EventRecord {
  double t = 0.0;
  std::vector<std::string> labels;
};

enum class Termination { kHorizon, kImpact };

struct SimulationResult {
  std::vector<TrajectorySample> samples;
  std::vector<EventRecord> events;
  Termination termination = Termination::kHorizon;
  std::vector<std::string> impact_contacts;
  /// Largest position or velocity correction made by constraint projection.
  double max_projection = 0.0;
};

/// A paradox met during integration; carries everything computed before it.
class SimulationParadox : public PainleveParadox {
 public:
  SimulationParadox(const PainleveParadox& cause, SimulationResult prefix)
      : PainleveParadox(cause), prefix_(std::move(prefix)) {}
  const SimulationResult& prefix() const { return prefix_; }

 private:
  SimulationResult prefix_;
};

/// Replaces the contact friction by an arbitrary generalized force
/// F(state, λ per contact); the reactions are then computed without friction.
using FrictionOverride =
    std::function<Vector(const GeneralizedState&, const std::vector<double>&)>;

struct SimulationOptions {
  /// One per contact; classified from gaps and slip speeds when empty.
  std::vector<ContactMode> initial_modes;
  FrictionOverride friction_override;
};

namespace detail {

class Simulator {
 public:
  Simulator(const MechanicalModel& model, const IntegrationConfig& cfg,
            const SimulationOptions& options)
      : model_(model), cfg_(cfg), options_(options) {}

  SimulationResult run(const GeneralizedState& initial) {
    cfg_.validate();
    check_model(model_, initial);
    q_ = initial.q();
    v_ = initial.v();
    t_ = initial.t();
    const auto contacts = model_.contacts(q_);
    p_ = contacts.size();
    hints_.assign(p_, std::nullopt);
    armed_.assign(p_, std::nullopt);
    check_initial(contacts);
    try {
      integrate();
    } catch (const SimulationParadox&) {
      throw;
    } catch (const PainleveParadox& e) {
      auto ctx = e.context();
      ctx["t"] = t_;
      throw SimulationParadox(PainleveParadox(e.what(), e.contacts(), ctx),
                              std::move(result_));
    }
    return std::move(result_);
  }

 private:
  struct Eval {
    std::vector<Contact> contacts;
    std::vector<int> role_of;  // contact -> role index, -1 when free
    ContactForceSolution sol;
    Vector accel;
    Vector friction;                   // generalized friction force
    std::vector<Vector> contact_force; // contact-space friction per contact
    std::vector<double> lambdas;       // per contact
    Vector bias;
    double det_rel = 1.0;
  };

  enum class EventKind { kSlipStop, kRelease, kStickBreak, kImpact, kModel };
  struct Watch {
    EventKind kind;
    std::size_t index;  // contact or model-event index
    Vector direction;   // slip direction when armed (slip-stop watches)
  };

  // --- evaluation ------------------------------------------------------------

  Vector tangential(const Contact& c, const Vector& v) const {
    const Vector vc = c.projection() * v;
    return vc - vc.dot(c.normal()) * c.normal();
  }

  Eval evaluate(const Vector& q, const Vector& v, double t) const {
    Eval e;
    e.contacts = model_.contacts(q);
    const InertiaMatrix a = model_.inertia(q);
    const Vector x = model_.applied_force(q, v);
    e.bias = constraint_bias(model_, q, v);
    const double scale = options_.friction_override ? 0.0 : 1.0;
    std::vector<ContactRole> roles;
    e.role_of.assign(p_, -1);
    for (std::size_t i = 0; i < p_; ++i) {
      if (!modes_[i].is_sustained()) continue;
      ContactRole role;
      role.index = i;
      role.sticking = modes_[i].is_sticking();
      role.friction_scale = scale;
      if (!role.sticking) {
        const Vector vt = tangential(e.contacts[i], v);
        const double speed = vt.norm();
        if (armed_[i] && armed_[i]->dot(vt) < cfg_.stick_eps) {
          // Past the slip-stop crossing: continue with the step-start
          // direction so the crossing stays visible to the watch.
          role.slip_direction = *armed_[i];
        } else if (speed < cfg_.stick_eps && hints_[i]) {
          role.slip_direction = *hints_[i];
        } else if (speed > 0.0) {
          role.slip_direction = vt / speed;
        } else {
          role.slip_direction = Vector::Zero(e.contacts[i].rank());
        }
      }
      e.role_of[i] = static_cast<int>(roles.size());
      roles.push_back(std::move(role));
    }
    e.sol = solve_contact_forces(model_, q, v, a, x, e.contacts, roles, e.bias,
                                 cfg_.singularity_tol);
    if (e.sol.singular) {
      std::vector<std::string> names;
      for (const auto& r : roles) names.push_back(e.contacts[r.index].label());
      throw PainleveParadox("contact force system is singular", names,
                            {{"t", t}, {"det", e.sol.determinant}});
    }
    e.det_rel = e.sol.determinant / e.sol.determinant_scale;
    e.accel = e.sol.acceleration;
    e.lambdas.assign(p_, 0.0);
    e.contact_force.assign(p_, Vector());
    for (std::size_t i = 0; i < p_; ++i) {
      e.contact_force[i] = Vector::Zero(e.contacts[i].rank());
      if (e.role_of[i] >= 0) {
        e.lambdas[i] = e.sol.lambdas[static_cast<std::size_t>(e.role_of[i])];
        e.contact_force[i] = e.sol.friction[static_cast<std::size_t>(e.role_of[i])];
      }
    }
    e.friction = e.sol.generalized_friction;
    if (options_.friction_override) {
      const Vector f = options_.friction_override(GeneralizedState(q, v, t), e.lambdas);
      detail::require(f.size() == model_.dof, "friction override: wrong size");
      e.friction = f;
      e.accel += a.solve(f);
      for (std::size_t i = 0; i < p_; ++i) {
        if (e.role_of[i] < 0) continue;
        const Matrix& pm = e.contacts[i].projection();
        const Eigen::MatrixXd ppt = pm * pm.transpose();
        e.contact_force[i] = ppt.ldlt().solve(Eigen::VectorXd(pm * f));
      }
    }
    return e;
  }

  std::pair<Vector, Vector> advance(const Vector& q, const Vector& v, double t,
                                    double h, const Eval* start) const {
    const Vector a1 = start ? start->accel : evaluate(q, v, t).accel;
    if (cfg_.method == Integrator::kMidpoint) {
      const Vector qm = q + 0.5 * h * v, vm = v + 0.5 * h * a1;
      const Vector am = evaluate(qm, vm, t + 0.5 * h).accel;
      return {q + h * vm, v + h * am};
    }
    const Vector q2 = q + 0.5 * h * v, v2 = v + 0.5 * h * a1;
    const Vector a2 = evaluate(q2, v2, t + 0.5 * h).accel;
    const Vector q3 = q + 0.5 * h * v2, v3 = v + 0.5 * h * a2;
    const Vector a3 = evaluate(q3, v3, t + 0.5 * h).accel;
    const Vector q4 = q + h * v3, v4 = v + h * a3;
    const Vector a4 = evaluate(q4, v4, t + h).accel;
    return {q + h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4),
            v + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)};
  }

  // --- events ----------------------------------------------------------------

  double event_value(const Watch& w, const Vector& q, const Vector& v,
                     double t, const Eval& e) const {
    switch (w.kind) {
      case EventKind::kSlipStop:
        // Slip along the armed direction: changes sign when the slip
        // reverses within a step, unlike its norm.
        return w.direction.dot(tangential(e.contacts[w.index], v)) - cfg_.stick_eps;
      case EventKind::kRelease:
        return e.lambdas[w.index];
      case EventKind::kStickBreak:
        return 1.0 - e.sol.stick_ratio[static_cast<std::size_t>(e.role_of[w.index])];
      case EventKind::kImpact:
        return model_.gaps(q)(static_cast<Eigen::Index>(w.index));
      case EventKind::kModel:
        return model_.events[w.index].function(GeneralizedState(q, v, t));
    }
    return 1.0;
  }

  bool model_event_armed(std::size_t k) const {
    for (const auto& label : model_.events[k].deactivate) {
      for (std::size_t i = 0; i < p_; ++i) {
        if (labels_[i] == label && modes_[i].is_sustained()) return true;
      }
    }
    return false;
  }

  std::vector<Watch> arm(const Vector& q, const Vector& v, const Eval& e) {
    std::vector<Watch> out;
    armed_.assign(p_, std::nullopt);
    for (std::size_t i = 0; i < p_; ++i) {
      if (modes_[i].is_slipping()) {
        const Vector vt = tangential(e.contacts[i], v);
        const double n = vt.norm();
        out.push_back({EventKind::kSlipStop, i, n > 0.0 ? Vector(vt / n) : vt});
      }
      if (modes_[i].is_sustained()) out.push_back({EventKind::kRelease, i, {}});
      if (modes_[i].is_sticking()) out.push_back({EventKind::kStickBreak, i, {}});
      if (modes_[i].is_free()) out.push_back({EventKind::kImpact, i, {}});
    }
    for (std::size_t k = 0; k < model_.events.size(); ++k) {
      if (model_event_armed(k)) out.push_back({EventKind::kModel, k, {}});
    }
    std::vector<Watch> armed;
    for (const auto& w : out) {
      if (event_value(w, q, v, t_, e) > 0.0) {
        if (w.kind == EventKind::kSlipStop) armed_[w.index] = w.direction;
        armed.push_back(w);
      }
    }
    return armed;
  }

  std::vector<std::size_t> crossed(const std::vector<Watch>& ws, const Vector& q,
                                   const Vector& v, double t,
                                   const Eval& e) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < ws.size(); ++k) {
      if (!(event_value(ws[k], q, v, t, e) > 0.0)) out.push_back(k);
    }
    return out;
  }

  // --- mode logic ------------------------------------------------------------

  void note(const std::string& label) {
    if (result_.events.empty() || result_.events.back().t != t_) {
      result_.events.push_back({t_, {}});
    }
    result_.events.back().labels.push_back(label);
  }

  void check_initial(const std::vector<Contact>& contacts) {
    const Vector gaps = model_.gaps(q_);
    labels_.clear();
    for (const auto& c : contacts) labels_.push_back(c.label());
    if (!options_.initial_modes.empty()) {
      detail::require(options_.initial_modes.size() == p_,
                      "simulate: initial_modes must have one entry per contact");
      modes_ = options_.initial_modes;
    } else {
      modes_.assign(p_, ContactMode::free());
      for (std::size_t i = 0; i < p_; ++i) {
        if (gaps(static_cast<Eigen::Index>(i)) <= 1e-9) {
          modes_[i] = tangential(contacts[i], v_).norm() >= cfg_.stick_eps
                          ? ContactMode::slipping()
                          : ContactMode::sticking();
        }
      }
    }
    for (std::size_t i = 0; i < p_; ++i) {
      const double gap = gaps(static_cast<Eigen::Index>(i));
      detail::require(gap >= -1e-9, "simulate: initial state penetrates contact '" +
                                        labels_[i] + "'");
      if (modes_[i].is_sustained()) {
        const double vn = contacts[i].gradient().dot(v_);
        detail::require(std::abs(gap) <= 1e-9 &&
                            std::abs(vn) <= 1e-9 * std::max(1.0, v_.norm()),
                        "simulate: initial state violates the constraint of "
                        "contact '" + labels_[i] + "'");
      }
    }
  }

  /// f̈ of a free contact under the current forces.
  double gap_acceleration(const Eval& e, std::size_t i) const {
    return e.contacts[i].gradient().dot(e.accel) - e.bias(static_cast<Eigen::Index>(i));
  }

  void release_for_singularity() {
    // Statically indeterminate stick sets: drop sticking contacts one at a
    // time until the system becomes solvable.
    for (std::size_t i = 0; i < p_; ++i) {
      if (!modes_[i].is_sticking()) continue;
      const auto saved = modes_[i];
      modes_[i] = ContactMode::free();
      try {
        (void)evaluate(q_, v_, t_);
        note(labels_[i] + ":release");
        return;
      } catch (const PainleveParadox&) {
        modes_[i] = saved;
      }
    }
    (void)evaluate(q_, v_, t_);  // rethrows the paradox
  }

  Eval resolve_modes() {
    armed_.assign(p_, std::nullopt);
    std::vector<int> released(p_, 0), activated(p_, 0);
    const double force_scale =
        std::max(1.0, model_.applied_force(q_, v_).norm());
    for (std::size_t pass = 0; pass < 4 * p_ + 4; ++pass) {
      Eval e;
      try {
        e = evaluate(q_, v_, t_);
      } catch (const PainleveParadox&) {
        release_for_singularity();
        continue;
      }
      // Most negative reaction first.
      std::optional<std::size_t> worst;
      for (std::size_t i = 0; i < p_; ++i) {
        if (modes_[i].is_sustained() && e.lambdas[i] < -1e-12 * force_scale &&
            (!worst || e.lambdas[i] < e.lambdas[*worst])) {
          worst = i;
        }
      }
      if (worst) {
        if (activated[*worst]) paradox_nonexistence(*worst, e);
        modes_[*worst] = ContactMode::free();
        released[*worst] = 1;
        note(labels_[*worst] + ":release");
        continue;
      }
      std::optional<std::size_t> breaking;
      double worst_ratio = 1.0 + 1e-9;
      for (std::size_t i = 0; i < p_; ++i) {
        if (!modes_[i].is_sticking()) continue;
        const double ratio = e.sol.stick_ratio[static_cast<std::size_t>(e.role_of[i])];
        if (ratio > worst_ratio) {
          worst_ratio = ratio;
          breaking = i;
        }
      }
      if (breaking) {
        const Vector s = e.sol.stick_slip[static_cast<std::size_t>(e.role_of[*breaking])];
        hints_[*breaking] = s / s.norm();
        modes_[*breaking] = ContactMode::slipping();
        note(labels_[*breaking] + ":slip");
        continue;
      }
      const Vector gaps = model_.gaps(q_);
      std::optional<std::size_t> touching;
      for (std::size_t i = 0; i < p_; ++i) {
        if (!modes_[i].is_free()) continue;
        const auto k = static_cast<Eigen::Index>(i);
        const double vn = e.contacts[i].gradient().dot(v_);
        if (gaps(k) <= 1e-9 && std::abs(vn) <= 1e-9 * std::max(1.0, v_.norm()) &&
            gap_acceleration(e, i) < -1e-9 * force_scale) {
          touching = i;
          break;
        }
      }
      if (touching) {
        if (released[*touching]) paradox_nonexistence(*touching, e);
        activated[*touching] = 1;
        const bool slides =
            tangential(e.contacts[*touching], v_).norm() >= cfg_.stick_eps;
        modes_[*touching] = slides ? ContactMode::slipping() : ContactMode::sticking();
        note(labels_[*touching] + ":contact");
        continue;
      }
      return e;
    }
    throw NumericalFailure("contact mode resolution did not settle at t = " +
                           std::to_string(t_));
  }

  [[noreturn]] void paradox_nonexistence(std::size_t i, const Eval& e) const {
    throw PainleveParadox(
        "no consistent contact mode: sustained contact needs a negative "
        "reaction while separation penetrates (contact '" + labels_[i] + "')",
        {labels_[i]}, {{"t", t_}, {"lambda", e.lambdas[i]}});
  }

  // --- constraint projection --------------------------------------------------

  /// Rows constraining velocities: gradients of sliding contacts, the whole
  /// P of sticking ones.
  Matrix velocity_constraints(const std::vector<Contact>& contacts) const {
    std::vector<Vector> rows;
    for (std::size_t i = 0; i < p_; ++i) {
      if (modes_[i].is_sticking()) {
        for (Eigen::Index r = 0; r < contacts[i].rank(); ++r) {
          rows.push_back(contacts[i].projection().row(r).transpose());
        }
      } else if (modes_[i].is_sustained()) {
        rows.push_back(contacts[i].gradient());
      }
    }
    Matrix c(static_cast<Eigen::Index>(rows.size()), model_.dof);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      c.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
    }
    return c;
  }

  /// A-orthogonal correction -A^{-1} Cᵀ (C A^{-1} Cᵀ)^+ r.
  static Vector a_projection(const InertiaMatrix& a, const Matrix& c,
                             const Vector& residual) {
    if (c.rows() == 0) return Vector::Zero(a.dof());
    const Matrix a_inv_ct = a.solve(Matrix(c.transpose()));
    const Eigen::MatrixXd s = c * a_inv_ct;
    const Eigen::VectorXd mult = s.completeOrthogonalDecomposition().solve(
        Eigen::VectorXd(residual));
    return -(a_inv_ct * mult);
  }

  void project(bool enforce_limit) {
    const auto contacts = model_.contacts(q_);
    const InertiaMatrix a = model_.inertia(q_);
    std::vector<Eigen::Index> active;
    for (std::size_t i = 0; i < p_; ++i) {
      if (modes_[i].is_sustained()) active.push_back(static_cast<Eigen::Index>(i));
    }
    double drift = 0.0;
    if (!active.empty()) {
      const Vector gaps = model_.gaps(q_);
      Matrix g(static_cast<Eigen::Index>(active.size()), model_.dof);
      Vector f(static_cast<Eigen::Index>(active.size()));
      for (std::size_t k = 0; k < active.size(); ++k) {
        g.row(static_cast<Eigen::Index>(k)) =
            contacts[static_cast<std::size_t>(active[k])].gradient().transpose();
        f(static_cast<Eigen::Index>(k)) = gaps(active[k]);
      }
      drift = std::max(drift, f.cwiseAbs().maxCoeff());
      const Vector dq = a_projection(a, g, f);
      q_ += dq;
      result_.max_projection = std::max(result_.max_projection, dq.norm());
    }
    const Matrix c = velocity_constraints(contacts);
    if (c.rows() > 0) {
      const Vector r = c * v_;
      drift = std::max(drift, r.cwiseAbs().maxCoeff());
      const Vector dv = a_projection(model_.inertia(q_), c, r);
      v_ += dv;
      result_.max_projection = std::max(result_.max_projection, dv.norm());
    }
    if (enforce_limit && drift > cfg_.drift_limit) {
      std::ostringstream os;
      os << "constraint drift " << drift << " exceeds limit " << cfg_.drift_limit
         << " at t = " << t_;
      throw NumericalFailure(os.str());
    }
  }

  // --- recording -------------------------------------------------------------

  void record(const Eval& e) {
    TrajectorySample s{GeneralizedState(q_, v_, t_), Vector::Zero(static_cast<Eigen::Index>(p_)),
                       modes_, 0.0, std::vector<double>(p_, 0.0), {}, 0.0};
    for (std::size_t i = 0; i < p_; ++i) {
      s.lambdas(static_cast<Eigen::Index>(i)) = e.lambdas[i];
      if (modes_[i].is_sustained()) {
        s.contact_powers[i] =
            e.contact_force[i].dot(e.contacts[i].projection() * v_);
      }
    }
    s.total_friction_power = e.friction.dot(v_);
    if (model_.invariants) s.invariant_values = model_.invariants(s.state);
    const InertiaMatrix a = model_.inertia(q_);
    s.energy = 0.5 * v_.dot(a.matrix() * v_) +
               (model_.potential_energy ? model_.potential_energy(q_) : 0.0);
    result_.samples.push_back(std::move(s));
  }

  // --- main loop -------------------------------------------------------------

  void integrate() {
    project(false);
    Eval e = resolve_modes();
    record(e);
    std::size_t steps = 0;
    int stalled = 0;
    const double t_final = t_ + cfg_.t_end;
    while (t_final - t_ > 1e-12 * cfg_.dt) {
      const double h = std::min(cfg_.dt, t_final - t_);
      const auto watches = arm(q_, v_, e);
      auto [q1, v1] = advance(q_, v_, t_, h, &e);
      Eval e1 = evaluate(q1, v1, t_ + h);
      if (!e.sol.lambdas.empty() && e.det_rel * e1.det_rel < 0.0) {
        throw PainleveParadox(
            "contact force determinant changed sign within a step",
            sustained_labels(), {{"t", t_}, {"det_start", e.det_rel},
                                 {"det_end", e1.det_rel}});
      }
      const auto hits = crossed(watches, q1, v1, t_ + h, e1);
      if (hits.empty()) {
        q_ = std::move(q1);
        v_ = std::move(v1);
        t_ += h;
        project(true);
        e = evaluate(q_, v_, t_);
        stalled = 0;
        if (touching_free_contact(e)) {
          if (normal_approach()) {
            record(e);
            result_.termination = Termination::kImpact;
            return;
          }
          e = resolve_modes();
        }
        if (++steps % cfg_.sample_every == 0 || t_final - t_ <= 1e-12 * cfg_.dt) {
          record(e);
        }
        continue;
      }
      // Bracket the earliest crossing.
      double lo = 0.0, hi = h;
      while (hi - lo > cfg_.event_tol) {
        const double mid = 0.5 * (lo + hi);
        auto [qm, vm] = advance(q_, v_, t_, mid, &e);
        const Eval em = evaluate(qm, vm, t_ + mid);
        if (crossed(watches, qm, vm, t_ + mid, em).empty()) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const double probe = std::min(hi + cfg_.event_tol, h);
      auto [qp, vp] = advance(q_, v_, t_, probe, &e);
      const Eval ep = evaluate(qp, vp, t_ + probe);
      auto fired = crossed(watches, qp, vp, t_ + probe, ep);
      if (fired.empty()) fired = hits;
      if (lo > 0.0) {
        auto [ql, vl] = advance(q_, v_, t_, lo, &e);
        q_ = std::move(ql);
        v_ = std::move(vl);
        t_ += lo;
        stalled = 0;
      } else {
        if (++stalled > static_cast<int>(8 * p_ + 8)) {
          throw NumericalFailure("event chattering at t = " + std::to_string(t_));
        }
        // Crossing within event_tol of the current time: switch at the probe.
        q_ = qp;
        v_ = vp;
        t_ += probe;
      }
      if (apply_events(watches, fired, ep)) {
        project(false);
        record(evaluate(q_, v_, t_));
        result_.termination = Termination::kImpact;
        return;
      }
      project(true);
      e = resolve_modes();
      record(e);
    }
  }

  /// A free contact at zero gap whose acceleration points inward.
  bool touching_free_contact(const Eval& e) const {
    const Vector gaps = model_.gaps(q_);
    const double force_scale = std::max(1.0, model_.applied_force(q_, v_).norm());
    for (std::size_t i = 0; i < p_; ++i) {
      if (!modes_[i].is_free() || gaps(static_cast<Eigen::Index>(i)) > 1e-9) continue;
      const double vn = e.contacts[i].gradient().dot(v_);
      if (vn < 0.0 || gap_acceleration(e, i) < -1e-9 * force_scale) return true;
    }
    return false;
  }

  /// Records an impact for free contacts at zero gap approaching with
  /// non-negligible normal speed.
  bool normal_approach() {
    const auto contacts = model_.contacts(q_);
    const Vector gaps = model_.gaps(q_);
    bool any = false;
    for (std::size_t i = 0; i < p_; ++i) {
      if (!modes_[i].is_free() || gaps(static_cast<Eigen::Index>(i)) > 1e-9) continue;
      if (contacts[i].gradient().dot(v_) < -1e-9 * std::max(1.0, v_.norm())) {
        result_.impact_contacts.push_back(labels_[i]);
        note(labels_[i] + ":impact");
        any = true;
      }
    }
    return any;
  }

  std::vector<std::string> sustained_labels() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < p_; ++i) {
      if (modes_[i].is_sustained()) out.push_back(labels_[i]);
    }
    return out;
  }

  /// Switches modes for the fired events. Returns true on impact.
  bool apply_events(const std::vector<Watch>& watches,
                    const std::vector<std::size_t>& fired, const Eval& probe) {
    armed_.assign(p_, std::nullopt);
    bool impact = false;
    bool stick = false;
    std::vector<double> model_before(model_.events.size(), 0.0);
    for (std::size_t k = 0; k < model_.events.size(); ++k) {
      model_before[k] = model_.events[k].function(GeneralizedState(q_, v_, t_));
    }
    for (auto idx : fired) {
      const Watch& w = watches[idx];
      switch (w.kind) {
        case EventKind::kSlipStop:
          if (modes_[w.index].is_slipping()) {
            modes_[w.index] = ContactMode::sticking();
            hints_[w.index].reset();
            stick = true;
            note(labels_[w.index] + ":stick");
          }
          break;
        case EventKind::kRelease:
          modes_[w.index] = ContactMode::free();
          note(labels_[w.index] + ":release");
          break;
        case EventKind::kStickBreak: {
          const auto r = static_cast<std::size_t>(probe.role_of[w.index]);
          const Vector slip = probe.sol.stick_slip[r];
          if (slip.norm() > 0.0) hints_[w.index] = slip / slip.norm();
          modes_[w.index] = ContactMode::slipping();
          note(labels_[w.index] + ":slip");
          break;
        }
        case EventKind::kImpact:
          impact = true;
          result_.impact_contacts.push_back(labels_[w.index]);
          note(labels_[w.index] + ":impact");
          break;
        case EventKind::kModel:
          fire_model_event(w.index);
          break;
      }
    }
    if (stick) {
      // Zero the sticking contact velocities by an A-orthogonal impulse.
      project(false);
      for (std::size_t k = 0; k < model_.events.size(); ++k) {
        const double after = model_.events[k].function(GeneralizedState(q_, v_, t_));
        if (model_event_armed(k) && model_before[k] > 0.0 && !(after > 0.0)) {
          fire_model_event(k);
        }
      }
    }
    return impact;
  }

  void fire_model_event(std::size_t k) {
    const auto& ev = model_.events[k];
    note(ev.name);
    for (const auto& label : ev.deactivate) {
      for (std::size_t i = 0; i < p_; ++i) {
        if (labels_[i] == label) modes_[i] = ContactMode::free();
      }
    }
  }

  const MechanicalModel& model_;
  IntegrationConfig cfg_;
  const SimulationOptions& options_;
  std::size_t p_ = 0;
  Vector q_, v_;
  double t_ = 0.0;
  std::vector<ContactMode> modes_;
  std::vector<std::optional<Vector>> armed_;
  std::vector<std::optional<Vector>> hints_;
  std::vector<std::string> labels_;
  SimulationResult result_;
};

}  // namespace detail

/// Integrates from `initial` over [t0, t0 + cfg.t_end]. Throws
/// SimulationParadox (a PainleveParadox) with the trajectory prefix,
/// NumericalFailure on constraint drift, ContractViolation on bad input.
inline SimulationResult simulate(const MechanicalModel& model,
                                 const GeneralizedState& initial,
                                 const IntegrationConfig& cfg,
                                 const SimulationOptions& options = {}) {
  detail::Simulator sim(model, cfg, options);
  return sim.run(initial);
}

struct InvariantDrift {
  double initial = 0.0;
  double max_abs = 0.0;
  double max_rel = 0.0;  // max_abs / max(|initial|, 1e-300)
};

struct MonitorReport {
  std::map<std::string, InvariantDrift> invariants;
  /// max |(F, v) - Σ (F_c, v_c)|.
  double max_power_residual = 0.0;
  /// max (F, v); dissipation means <= 0 up to roundoff.
  double max_friction_power = -std::numeric_limits<double>::infinity();
  /// Largest energy increase between consecutive samples.
  double max_energy_increase = 0.0;
  double initial_energy = 0.0;
  std::vector<EventRecord> events;
};

inline MonitorReport monitor_report(const SimulationResult& result) {
  detail::require(!result.samples.empty(), "monitor_report: empty trajectory");
  MonitorReport out;
  const auto& first = result.samples.front();
  out.initial_energy = first.energy;
  for (const auto& [name, value] : first.invariant_values) {
    out.invariants[name].initial = value;
  }
  for (std::size_t k = 0; k < result.samples.size(); ++k) {
    const auto& s = result.samples[k];
    double sum = 0.0;
    for (double c : s.contact_powers) sum += c;
    out.max_power_residual =
        std::max(out.max_power_residual, std::abs(s.total_friction_power - sum));
    out.max_friction_power = std::max(out.max_friction_power, s.total_friction_power);
    for (const auto& [name, value] : s.invariant_values) {
      auto& d = out.invariants[name];
      const double dev = std::abs(value - d.initial);
      d.max_abs = std::max(d.max_abs, dev);
      d.max_rel = std::max(d.max_rel, dev / std::max(std::abs(d.initial), 1e-300));
    }
    if (k > 0) {
      out.max_energy_increase = std::max(
          out.max_energy_increase, s.energy - result.samples[k - 1].energy);
    }
  }
  out.events = result.events;
  return out;
}

}  // namespace dryfric
