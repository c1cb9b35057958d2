# Sparse Sperner graphs from chain decompositions, then containers on them.
from uniform_chains import run_pipeline, symmetric_decomposition
from uniform_chains.containers import container_stats, max_comparable_degree
from uniform_chains.lattice import comparability_edge_count
from uniform_chains.sperner import build_sperner_graph, certify_alpha, turan_lower_bound

# %% the full comparability graph is dense
for n in (4, 8, 12):
    print(n, comparability_edge_count(n), 3 ** n - 2 ** n)

# %% keeping only edges along chains of a decomposition
n = 12
for label, D in [("symmetric", symmetric_decomposition(n)), ("pipeline", run_pipeline(n, 0)[0])]:
    G = build_sperner_graph(D)
    cert = certify_alpha(G)
    print(f"{label}: |E|={G.num_edges} normalized={G.normalized_edges():.4f} "
          f"alpha certified={cert.certified} turan={float(turan_lower_bound(n)):.0f}")

# %% containers; the pipeline's T at small n is a single level so nothing happens
st = container_stats(12, seed=0, samples=50)
print({k: st[k] for k in ("T_size", "contained", "max_fingerprint", "budget")})

# the upper half is a more interesting host
st = container_stats(12, seed=0, samples=50, family="upper")
print({k: st[k] for k in ("T_size", "contained", "max_fingerprint", "budget")})

# %% degree bound: some member of a family with Lubell mass in (1, 2) has many comparabilities
import numpy as np
from uniform_chains.lattice import level
F = np.concatenate([level(10, 5), level(10, 6)[::3]])
print(len(F), max_comparable_degree(F, 10, 1))
