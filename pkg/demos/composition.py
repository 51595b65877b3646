# Composing Delta/Gamma refinements bottom-up, and what templates add.
#
# Delta_i(phi) holds where y_i = 0 leaves phi unsatisfiable for every choice
# of y_1..y_{i-1}; Gamma_i is the same with y_i = 1.  Both are computed
# per node from the children's values without a SAT call.
from parsyn import Manager, VarTable, oracle
from parsyn.compose import apply_template, build_template, compose_and, compose_or, leaf_delta_gamma

m = Manager()
vars = VarTable(("x1",), ("y1", "y2"))
x1, y1, y2 = (m.var(n) for n in ("x1", "y1", "y2"))


def show(title, vec):
    print(title)
    for i, y in enumerate(vars.outputs):
        print(f"   {y}: delta = {m.to_str(vec.delta[i]):20s} gamma = {m.to_str(vec.gamma[i])}")


# %% Leaves are exact
for leaf in (y1, m.not_(y2), x1):
    show(f"leaf {m.to_str(leaf)}", leaf_delta_gamma(m, leaf, vars).pos)

# %% OR of exact children is exact, AND is only a refinement
c1, c2 = m.or_(y1, x1), m.or_(y1, m.not_(x1))
q1 = compose_or(m, [leaf_delta_gamma(m, y1, vars).pos, leaf_delta_gamma(m, x1, vars).pos])
q2 = compose_or(m, [leaf_delta_gamma(m, y1, vars).pos, leaf_delta_gamma(m, m.not_(x1), vars).pos])
show("y1 | x1", q1)
show("y1 | ~x1", q2)
conj = compose_and(m, [q1, q2])
show("(y1 | x1) & (y1 | ~x1), composed", conj)
d, _ = oracle.exact_delta_gamma(m, m.and_(c1, c2), vars)
print("   exact Delta_1 is", "1 everywhere" if d[0].all() else "not constant")

# %% Operator templates
for op, arity in (("ite", 3), ("xor_pair", 3)):
    tpl = build_template(op, arity)
    tm = tpl.manager
    print(f"template {op}:")
    for l in range(arity):
        print(f"   child {l + 1}: Omega = {tm.to_str(tpl.omega_pos[l]):16s} Upsilon = {tm.to_str(tpl.upsilon_pos[l])}")

# %% (c1 ^ c2) & (c1 ^ c3) with c3 = ~c2 is unsatisfiable, so Delta_2 = 1.
# Expanding into AND/OR loses this; the template keeps it.
c1, c2, c3 = y1, x1, m.not_(x1)


def axor(a, b):
    return m.or_(m.and_(m.not_(a), b), m.and_(a, m.not_(b)))


def annotate(root):
    from parsyn.compose import compose_node
    ann = {}
    for g in m.topo([root]):
        ann[g] = leaf_delta_gamma(m, g, vars) if m.is_leaf(g) else \
            compose_node(m, g, [ann[c] for c in m.children(g)])
    return ann[root]


phi = m.and_(axor(c1, c2), axor(c1, c3))
naive = annotate(phi).pos
tpl = apply_template(m, build_template("xor_pair", 3), [annotate(c) for c in (c1, c2, c3)]).pos
print("AND/OR expansion: delta_2 =", m.to_str(naive.delta[1]))
print("xor_pair template: delta_2 =", m.to_str(tpl.delta[1]))
