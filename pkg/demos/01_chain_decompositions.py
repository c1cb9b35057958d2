# Chain decompositions of 2^[n], symmetric versus the uniform pipeline.
import numpy as np

from uniform_chains import (run_pipeline, sigma_profile, symmetric_decomposition,
                            uniformity_stats, verify_chain_decomposition)

n = 12

# %% the symmetric decomposition has the classic size profile
S = symmetric_decomposition(n)
print("symmetric:", S.num_chains, "chains")
print(S.profile().histogram())

# %% the pipeline, one seed
D, trace = run_pipeline(n, seed=0)
rep = verify_chain_decomposition(D)
print("pipeline valid:", rep.passed, "chains:", D.num_chains)
print("constants:", trace.constants)
print("block counts:", trace.counts())

# %% chain sizes side by side
for label, dec in [("symmetric", S), ("pipeline", D)]:
    sizes = dec.sizes()
    print(f"{label:>9}: min {sizes.min()} max {sizes.max()} mean {sizes.mean():.3f}")

# sigma is the profile every decomposition is majorized by
print("sigma:", sigma_profile(n).sigma.histogram())

# %% how many chains land near sqrt(n)
for eps in (0.25, 0.5, 1.0):
    a = uniformity_stats(S, eps)
    b = uniformity_stats(D, eps)
    print(f"eps={eps}: near-uniform {a.near_uniform_fraction:.3f} -> {b.near_uniform_fraction:.3f}")
