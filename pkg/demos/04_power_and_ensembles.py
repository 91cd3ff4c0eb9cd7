"""Power-based matching and the two ensembles.

The power method matches large load steps of each customer against the
transformer's per-phase power and subtracts every decided customer from the
residual.  Bagging uses voltage wherever it exists and power otherwise;
boosting trusts voltage only above a confidence threshold and lets the power
method work on what remains.
"""

from phaseid import (EnsembleConfig, MeterClass, NoiseContext, accuracy, bagging_assign, boosting_assign,
                     build_feeder, drop_voltage_columns, generate_campaign, inject_noise, mlp_assign,
                     mlv_assign)

c = generate_campaign(build_feeder("C", 0), 0)
noisy = inject_noise(c, MeterClass.from_name("1.0"), NoiseContext(seed=4))

print("voltage coverage   mlv    mlp    bagging  boosting")
for frac in (0.0, 0.5, 1.0):
    part = drop_voltage_columns(noisy, frac, seed=0)
    row = [accuracy(mlv_assign(part), c.truth), accuracy(mlp_assign(part), c.truth),
           accuracy(bagging_assign(part), c.truth), accuracy(boosting_assign(part), c.truth)]
    print(f"{frac:15.2f}   " + "  ".join(f"{x:.3f}" for x in row))

routes = [a.route for a in boosting_assign(noisy, EnsembleConfig(0.5))]
print(f"\nboosting at threshold 0.5*T decides {routes.count('voltage')} by voltage, "
      f"{routes.count('power')} by power")
