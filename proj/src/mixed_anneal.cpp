#include "mivabo/mixed_anneal.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mivabo/errors.hpp"

namespace mivabo {

nlohmann::json MixedAnnealSchedule::to_json() const {
  return {{"t0", t0}, {"decay", decay}, {"steps", steps}, {"cont_step", cont_step}, {"penalty", penalty}};
}

MixedAnnealSchedule MixedAnnealSchedule::from_json(const nlohmann::json& j) {
  MixedAnnealSchedule s;
  s.t0 = j.value("t0", s.t0);
  s.decay = j.value("decay", s.decay);
  s.steps = j.value("steps", s.steps);
  s.cont_step = j.value("cont_step", s.cont_step);
  s.penalty = j.value("penalty", s.penalty);
  return s;
}

MixedPoint propose_mixed_move(const MixedPoint& p, double cont_step, Rng& rng) {
  const int dd = static_cast<int>(p.x_disc.size());
  const int dc = static_cast<int>(p.x_cont.size());
  MixedPoint next = p;
  std::uniform_int_distribution<int> pick(0, dd + dc - 1);
  const int which = pick(rng);
  if (which < dd) {
    next.x_disc[which] ^= 1U;
  } else {
    std::normal_distribution<double> step(0.0, cont_step);
    const int c = which - dd;
    next.x_cont[c] = std::clamp(next.x_cont[c] + step(rng), 0.0, 1.0);
  }
  return next;
}

bool metropolis_accept(double delta, double temperature, Rng& rng) {
  if (delta <= 0.0) return true;
  if (temperature <= 0.0) return false;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return unit(rng) < std::exp(-delta / temperature);
}

MixedAnnealResult mixed_anneal(const MixedDomain& domain,
                               const std::function<double(const MixedPoint&)>& energy,
                               const MixedAnnealSchedule& schedule, Rng& rng, MixedPoint start,
                               bool respect_constraints, std::vector<double>* energies) {
  domain.check_dims(start.x_disc, start.x_cont);
  if (domain.d_disc() + domain.d_cont() == 0) throw DimensionError("mixed_anneal: empty domain");

  auto feasible = [&](const MixedPoint& p) {
    return !respect_constraints || domain.constraints().satisfied(p.x_disc);
  };
  MixedAnnealResult result;
  MixedPoint cur = std::move(start);
  double cur_value = energy(cur);
  bool cur_ok = feasible(cur);
  double cur_energy = cur_value + (cur_ok ? 0.0 : schedule.penalty);
  if (cur_ok) {
    result.best = cur;
    result.best_value = cur_value;
    result.found_feasible = true;
  }
  double temp = schedule.t0;
  for (long step = 0; step < schedule.steps; ++step) {
    MixedPoint cand = propose_mixed_move(cur, schedule.cont_step, rng);
    const double value = energy(cand);
    const bool ok = feasible(cand);
    const double e = value + (ok ? 0.0 : schedule.penalty);
    if (metropolis_accept(e - cur_energy, temp, rng)) {
      cur = std::move(cand);
      cur_value = value;
      cur_ok = ok;
      cur_energy = e;
      if (cur_ok && (!result.found_feasible || cur_value < result.best_value)) {
        result.best = cur;
        result.best_value = cur_value;
        result.found_feasible = true;
      }
    }
    if (energies) energies->push_back(cur_energy);
    temp *= schedule.decay;
  }
  return result;
}

}  // namespace mivabo
