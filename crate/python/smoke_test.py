"""Quick end-to-end check of the Python bindings.

Build and install first:  pip install ./crates/python
"""

import pydiffpoly as dp

w = dp.random_geometric(10, 0.6, seed=3)
t = dp.diffusion_operator(w)
values, vectors = dp.eig(t)
assert abs(values[0] - 1.0) < 1e-9

# exact basis: the generating eigenvalues are admissible and Simple recovers T
exact = dp.Polytope(vectors, values)
assert exact.is_member(values)
sel = exact.solve("simple")
assert abs(sel["objective"]) < 1e-7
assert dp.mepre(t, exact.reconstruct(sel["lam"])) < 1e-6

# sample basis
x = dp.generate_signals(t, 5000, seed=4)
poly = dp.Polytope.from_signals(x)
for strategy in ("simple", "sparse"):
    t_hat = poly.reconstruct(poly.solve(strategy)["lam"])
    score = dp.edge_score(t, t_hat)
    print(f"{strategy}: F = {score['f_measure']:.3f}, MEPRE = {dp.mepre(t, t_hat):.4f}")

proj = poly.project(t)
assert proj["converged"] and poly.is_member(proj["lam_hat"], 1e-6)

other = dp.diffusion_operator(dp.random_geometric(10, 0.6, seed=11))
ranking = dp.hypothesis_test([other, t], x)
assert ranking[0][0] == 1, ranking

try:
    poly.solve("dense")
except ValueError:
    pass
else:
    raise AssertionError("unknown strategy accepted")

csv = dp.run_experiment("simple-convergence", [("trials", "3"), ("m", "100, 1000")])
assert csv.splitlines()[0].startswith("m,count")
print("smoke test passed")
