"""Score districting plans under the swing election model.

A plan is its vector of baseline district-level Republican vote shares.
Elections perturb every district with a shared national swing plus an
independent district swing; seat expectations and their derivatives then
have closed forms. Wasted-vote measures are read off the baseline shares.
"""

import numpy as np

from leeway import (EnsembleSummary, PlanProfile, SwingModel, competitive_share,
                    dilution_asymmetry, efficiency_gap, expected_seats,
                    partisan_bias, responsiveness, simulation_adjust)

model = SwingModel.calibrated()
print(f"swing model: sigma_national = sigma_district = {model.sigma_national:.4f} "
      f"(total {model.sigma_total:.4f})")
print()

# Three stylized plans over the same 60/40 statewide electorate:
plans = {
    "competitive map": PlanProfile((0.52, 0.50, 0.48, 0.50)),
    "packed map":      PlanProfile((0.55, 0.55, 0.55, 0.35)),  # packs one side
    "safe-seat map":   PlanProfile((0.70, 0.65, 0.35, 0.30)),
}

print(f"{'plan':<16} {'E[R seats]':>10} {'resp.':>7} {'compet.':>8} "
      f"{'eff.gap':>8} {'bias':>7} {'dilution':>9}")
for name, plan in plans.items():
    print(f"{name:<16} {expected_seats(plan, model):>10.2f} "
          f"{responsiveness(plan, model):>7.2f} "
          f"{competitive_share(plan, model):>8.2f} "
          f"{efficiency_gap(plan):>8.3f} "
          f"{partisan_bias(plan, model, 0.5):>7.3f} "
          f"{dilution_asymmetry(plan):>9.3f}")
print()

# The packed map converts the same votes into an extra expected seat and a
# pro-Republican efficiency gap; the safe-seat map kills responsiveness.

# ---------------------------------------------------------------------------
# A seats-votes curve: expected seat share as the statewide vote moves.
# ---------------------------------------------------------------------------
from leeway.metrics import seat_share_at_vote

print("seats-votes curve (expected Republican seat share)")
votes = np.linspace(0.44, 0.56, 7)
header = "  vote:  " + "  ".join(f"{v:.2f}" for v in votes)
print(header)
for name, plan in plans.items():
    shares = [seat_share_at_vote(plan, model, v) for v in votes]
    print(f"  {name:<14}" + "  ".join(f"{s:.2f}" for s in shares))
print()

# ---------------------------------------------------------------------------
# Differencing against a nonpartisan ensemble: how far is the enacted plan
# from what neutral map-drawing would have produced in the same geography?
# ---------------------------------------------------------------------------
enacted_seats = expected_seats(plans["packed map"], model)
ensemble = EnsembleSummary(mean_outcome=2.1, sd_outcome=0.4)
adjusted = simulation_adjust(enacted_seats, ensemble)
print(f"packed map vs neutral ensemble: diff = {adjusted.difference:+.2f} seats, "
      f"z = {adjusted.z_score:+.2f}")
