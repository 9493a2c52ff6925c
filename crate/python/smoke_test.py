"""Smoke test for the quasieq extension module.

Build first (see README), then run: python3 python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import quasieq  # noqa: E402


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok   {what}")


p = quasieq.example_4_1()
check(p.dim == 1 and p.x0 == [5.0], "example_4_1 shape")
check(p.bounds == ([0.0], [10.0]), "example_4_1 bounds")
check(p.eval([5.0], [0.0]) == -(math.sqrt(5.0) + 2 * 25.0), "f(5, 0)")
check(p.project([12.0]) == [10.0], "projection")

r1 = p.solve()
r2 = p.solve(sigma_c=2.0)
check((r1.status, r1.iterations) == ("fixed_point", 84), "sigma 1/(k+1): 84 iterations")
check(r2.iterations == 8 and r2.final == [0.0], "sigma 2/(k+1): 8 iterations")
errs = r1.errors()
check(len(errs) == 84 and errs[-1][2] is None, "error series")
check(r1.trace_csv().splitlines()[0] == "k,x_0,err_xy,err_step,sigma,rho,m,prox_flag", "trace header")

check(p.gap([0.0])["value"] >= 0.0, "0 solves example_4_1")

c = quasieq.counterexample_cubic()
check(c.gap([0.0])["value"] == -1.0, "cubic gap at 0")
check(c.quasi_residual([0.0], 0.4)["value"] >= 0.0, "cubic quasi residual at 0")

s = quasieq.example_4_2_small()
res = s.solve(max_iters=50)
check(res.iterations <= 50 and all(0.0 <= v <= 5.0 for v in res.final), "example_4_2_small stays feasible")

q = quasieq.random_fractional(4, 3)
q2 = quasieq.from_json(q.to_json())
check(json.loads(q2.to_json()) == json.loads(q.to_json()), "spec round trip")

try:
    quasieq.example_4_2_ten().gap([1.0] * 10)
except RuntimeError as e:
    check("oracle unavailable" in str(e), "grid oracle refuses n = 10")
else:
    check(False, "grid oracle refuses n = 10")

try:
    quasieq.example_4_1(r=-1.0)
except ValueError:
    check(True, "invalid parameters raise ValueError")
else:
    check(False, "invalid parameters raise ValueError")

print("smoke test passed")
