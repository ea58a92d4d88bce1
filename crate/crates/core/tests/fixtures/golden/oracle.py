#!/usr/bin/env python3
"""Independent re-implementation of the candidate-generation procedure, used
only to produce the frozen golden files next to it. Plain Python floats, no
shared code with the Rust crate.

    python3 oracle.py > candidates.golden.jsonl
"""
import json
import math
import sys
from pathlib import Path

HERE = Path(__file__).parent


def unit(v):
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def dist(u, v):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(u, v)))


def cos(u, v):
    return sum(a * b for a, b in zip(u, v)) / (math.sqrt(sum(a * a for a in u)) * math.sqrt(sum(b * b for b in v)))


class Cluster:
    def __init__(self, members, vec, tau):
        self.members = sorted(set(members))
        n = len(self.members)
        dim = len(vec[self.members[0]])
        self.center = [sum(vec[m][i] for m in self.members) / n for i in range(dim)]
        ranked = sorted((dist(self.center, vec[m]), m) for m in self.members)
        self.seeds = ranked[:tau]
        self.threshold = ranked[0][0]


def main():
    fx = json.loads((HERE / "fixture.json").read_text())
    tau = fx["tau"]
    vec = {k: unit(v) for k, v in fx["vectors"].items()}
    m = sorted(fx["course_concepts"].items(), key=lambda kv: (-kv[1], kv[0]))
    m_ids = [k for k, _ in m]
    triples = sorted(set(tuple(t) for t in fx["triples"]))

    def neighbors(c):
        out = sorted((r, t) for h, r, t in triples if h == c)
        inc = sorted((r, h) for h, r, t in triples if t == c)
        return [(r, t, "forward") for r, t in out] + [(r, h, "reverse") for r, h in inc]

    h0 = Cluster(m_ids, vec, tau)
    thr = h0.threshold
    group_of, groups = {}, []
    for i, c in enumerate(m_ids):
        best = None
        for o in m_ids[:i]:
            d = dist(vec[c], vec[o])
            if d < thr and (best is None or (d, o) < best):
                best = (d, o)
        if best is None:
            same = sorted(o for o in m_ids[:i] if vec[o] == vec[c])
            best = (0.0, same[0]) if same else None
        if best is None:
            groups.append([c])
            group_of[c] = len(groups)
        else:
            g = group_of[best[1]]
            groups[g - 1].append(c)
            group_of[c] = g
    clusters = {g + 1: Cluster(ms, vec, tau) for g, ms in enumerate(groups)}
    separated = set()
    h0_members = list(m_ids)

    def separate(g):
        nonlocal h0, h0_members
        separated.add(g)
        h0_members = [x for x in h0_members if x not in clusters[g].members]
        h0 = Cluster(h0_members, vec, tau) if h0_members else None
        print(f"# separate cluster {g}; H0 now {h0_members}", file=sys.stderr)

    for g in sorted(clusters):
        if len(clusters[g].members) >= tau:
            separate(g)

    seen = set(m_ids)
    path = {c: [c] for c in m_ids}
    dirs = {c: [] for c in m_ids}
    result = []
    frontier = m_ids
    wave = 0
    while frontier and wave < fx["max_waves"]:
        wave += 1
        nxt = []
        for a in frontier:
            g = group_of[a]
            for r, e, d in neighbors(a):
                if e in seen:
                    continue
                if e not in vec:
                    print(f"# skip unembedded {e}", file=sys.stderr)
                    continue
                t = clusters[g].threshold if g in separated else h0.threshold
                de = dist(vec[e], vec[a])
                if not de < t:
                    print(f"# wave {wave}: reject {e} via {a} ({de:.4f} >= {t:.4f})", file=sys.stderr)
                    continue
                s = cos(vec[e], vec[a]) + sum(
                    cos(vec[k], vec[a]) * cos(vec[e], vec[k]) for k in clusters[g].members if k != a
                )
                print(f"# wave {wave}: admit {e} via {a} into {g} ({de:.4f} < {t:.4f}) s={s:.6f}", file=sys.stderr)
                clusters[g] = Cluster(clusters[g].members + [e], vec, tau)
                seen.add(e)
                group_of[e] = g
                path[e] = path[a] + [r, e]
                dirs[e] = dirs[a] + [d]
                nxt.append({"id": e, "score": s, "wave": wave, "cluster": g, "path": path[e], "directions": dirs[e]})
                if g not in separated and len(clusters[g].members) >= tau:
                    separate(g)
        nxt.sort(key=lambda c: (-c["score"], c["id"]))
        result += nxt
        frontier = [c["id"] for c in nxt]
    result.sort(key=lambda c: (-c["score"], c["id"]))
    for c in result:
        print(json.dumps(c))


if __name__ == "__main__":
    main()
