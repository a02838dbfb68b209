// Reference point A = 0.5, S = 4, z0 = 4: exact spin flip in both directions
// and how far each closed-form approximation is from the exact state at t = 1.

#include <cstdio>

#include "sgwave/sgwave.hpp"

int main() {
  using namespace sgwave;
  const SimParams p = SimParams::with_defaults(0.5, 4.0, 4.0);

  RunPair exact;
  for (Spin s : {Spin::up, Spin::down}) {
    const EvolutionRecord rec = evolve_in_magnet(initial_state(p, s), p);
    (s == Spin::up ? exact.plus : exact.minus) = coeffs_to_grid(rec.final, p);
  }
  std::printf("p(+1/2 -> -1/2) = %.4f\n", spin_flip_probability(exact.plus, Spin::up));
  std::printf("p(-1/2 -> +1/2) = %.4f\n", spin_flip_probability(exact.minus, Spin::down));

  for (Approximation a : kAllApproximations) {
    const RunPair ap{approximate_wavefunction(a, p, 1.0, Spin::up), approximate_wavefunction(a, p, 1.0, Spin::down)};
    std::printf("1 - O  %-17s %.5f\n", approximation_name(a), 1.0 - overlap(exact, ap));
  }
}
