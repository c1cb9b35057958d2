# Forbidden configurations on small grids, and the binomial estimates.
from uniform_chains import extremal as ex
from uniform_chains import numerics as nm

# %% exact extremal numbers by branch and bound
for k in (2, 3, 4):
    r = ex.ex_exact(ex.grid(k, 2), ex.corner())
    print(f"corner in [{k}]^2: {r.value}", r.witness())

for n in range(1, 6):
    print(n, ex.ex_oracle(ex.boolean_lattice(n), ex.comparable_pair()))

# %% a poset given as a relation
import numpy as np
V = np.array([[0, 1, 1], [0, 0, 0], [0, 0, 0]], dtype=bool)
C = ex.poset_weak(V)
print(C, ex.ex_oracle(ex.boolean_lattice(4), C))

# %% grid partitions give upper bounds on 2^[n]
P = ex.grid_partition(8, 2)
print(P.num_cells, P.verify()["passed"], ex.partition_bound(P, ex.comparable_pair()))
print(ex.theorem32_bound(400, 1, 1.0, 1.0))

# %% numerics
print(nm.appendix_table_check()["passed"])
for part in (1, 2, 3, 4):
    rep = nm.binomial_estimate_check(part)
    print(part, rep.passed, rep.max_rel_deviation)
