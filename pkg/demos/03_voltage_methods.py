"""Voltage-based identification: correlation against two references and K-means.

Correlating each customer's voltage with the three transformer phase voltages
is the strongest voltage method.  A three-phase customer partway down the
feeder is a weaker reference because it shares little impedance with
customers on other branches.  K-means only sees the voltage profiles
themselves and has to be mapped to phases afterwards.
"""

from phaseid import (MeterClass, NoiseContext, accuracy, build_feeder, generate_campaign, inject_noise,
                     kmeans_assign, mlv_assign)

c = generate_campaign(build_feeder("E", 0), 0)
print("class   transformer  customer  kmeans")
for name in ("exact", "0.1", "0.5", "1.0"):
    noisy = inject_noise(c, MeterClass.from_name(name), NoiseContext(seed=0))
    tr = accuracy(mlv_assign(noisy, "transformer"), c.truth)
    cu = accuracy(mlv_assign(noisy, "customer"), c.truth)
    _, km, mode = kmeans_assign(noisy, restarts=5)
    print(f"{name:>5}   {tr:11.3f}  {cu:8.3f}  {accuracy(km, c.truth):6.3f}  ({mode})")

a = mlv_assign(c)[0]
print(f"\nfirst assignment: {a.customer_id} -> {a.predicted} with score {a.score:.1f} of at most {c.T}")
