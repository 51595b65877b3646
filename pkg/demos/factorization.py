# Factoring with Skolem functions.
#
# The specification says "A * B == P and neither factor is 1".  P is the
# input, A and B are the outputs.  Synthesizing Skolem functions for A and B
# gives a circuit that factors any P that has a factorization at this width.
import itertools
import time

from parsyn import SynthesisConfig, gen_factorization, synthesize
from parsyn.bench import factor_names

bits = 3
spec = gen_factorization(bits)
m = spec.manager
print(f"{bits}-bit factors: {len(spec.vars.inputs)} product bits, {len(spec.vars.outputs)} factor bits, "
      f"{m.size(spec.root)} DAG nodes")

t0 = time.perf_counter()
res = synthesize(spec, SynthesisConfig(workers=4), check=True)
print(f"synthesized in {time.perf_counter() - t0:.2f}s, verification: {res.verification.verdict}")
print("output order chosen by the fan-in heuristic:", " ".join(res.spec.vars.outputs))

# %% Evaluate the synthesized circuit on every product value
p, a, b = factor_names(bits)
f = res.skolem.as_dict()
products = {}
for av, bv in itertools.product(range(1 << bits), repeat=2):
    if av != 1 and bv != 1:
        products.setdefault(av * bv, []).append((av, bv))

unrealizable = []
for x in range(1 << (2 * bits)):
    env = {n: bool(x >> k & 1) for k, n in enumerate(p)}
    av = sum(m.eval(f[n], env) << k for k, n in enumerate(a))
    bv = sum(m.eval(f[n], env) << k for k, n in enumerate(b))
    if x in products:
        mark = "ok" if av * bv == x else "WRONG"
        print(f"P={x:2d}  A={av}  B={bv}  {mark}")
    else:
        # nothing satisfies the spec here, any output is acceptable
        unrealizable.append(x)
print(f"{len(unrealizable)} products have no factorization with {bits}-bit factors, e.g. "
      + ", ".join(map(str, unrealizable[:8])))

# %% Where does the time go?
top = sorted(res.run.results.values(), key=lambda r: -r.wall_time)[:5]
for r in top:
    print(f"node {r.node:4d} size {m.size(r.node):4d}: {r.wall_time:.3f}s, "
          f"{r.cegar.iterations} counterexamples, root={r.node == res.run.root}")
