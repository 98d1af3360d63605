# Independent check of the lesson corpus: fold of all steps and the count of
# valid orders of the 5-step removal slice. Parses the files with regexes.
import itertools, re
model = open("corpus/xppu.plant").read()
lesson = open("corpus/replace_pickalpha.lesson").read()
status = {m[0]: (m[1] != "disconnected") for m in re.findall(r"^connect (\S+) \S+ \S+(?: initial=(\w+))?", model, re.M)}
obs = {k: float(v) for k, v in re.findall(r"^observable (\S+) = (\S+)", model, re.M)}
parent = dict(re.findall(r"^block (\S+) .*?parent=(\S+)", model, re.M))
def within(b, a):
    while b is not None:
        if b == a: return True
        b = parent.get(b)
    return False
steps = [dict(i=int(i), target=t, cls=c, op=o) for i, t, c, o in
         re.findall(r'^step (\d+) ".*?" target=(\S+) class=(\S+) op=(.*)$', lesson, re.M)]
prec = re.findall(r"^constraint precedence (\S+) < (\S+)(?: scope=module:(\S+))?", lesson, re.M)
ver = re.findall(r"^constraint verify (\S+) == (\S+) after=(\S+) before=(\S+)", lesson, re.M)
def run(order):
    st, ob, vals = dict(status), dict(obs), []
    for s in order:
        w = s["op"].split()
        if w[0] in ("connect", "disconnect"):
            want = w[0] == "connect"
            if st[w[1]] == want: return None
            st[w[1]] = want
        elif w[0] == "set": ob[w[1]] = float(w[2])
        elif w[0] == "verify" and ob[w[1]] != float(w[3]): return None
        vals.append(dict(ob))
    return st, ob, vals
def valid(order):
    r = run(order)
    if r is None: return False
    vals = r[2]
    for b, a, scope in prec:
        for x, y in itertools.combinations(range(len(order)), 2):
            sx, sy = order[x], order[y]
            if sx["cls"] == a and sy["cls"] == b and (not scope or (within(sx["target"], scope) and within(sy["target"], scope))):
                return False
    for name, value, after, before in ver:
        A = [p for p, s in enumerate(order) if s["cls"] == after]
        B = [p for p, s in enumerate(order) if s["cls"] == before]
        if A and B and not any(order[v]["op"].startswith("verify " + name) and max(A) < v < min(B)
                               and vals[v][name] == float(value) for v in range(len(order))):
            return False
    return True
st, ob, _ = run(steps)
print("steps", len(steps), "lesson valid", valid(steps))
print("after 13 disconnected:", sorted(k for k, v in st.items() if not v))
slice_ = [s for s in steps if s["i"] in (1, 2, 4, 6, 7)]
good = [p for p in itertools.permutations(slice_) if valid(list(p))]
print("slice valid orders", len(good), "of 120", [[s["i"] for s in p] for p in good])
