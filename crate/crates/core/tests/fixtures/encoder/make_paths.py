# Generates paths.tsv: 50 synthetic search paths, one per line, tab-separated
# tokens (root, then relation/concept pairs; "~rel" marks a reverse edge).
import random

rng = random.Random(11)
concepts = ["array", "linked list", "stack", "queue", "heap", "binary tree",
            "bst", "avl tree", "hash table", "graph", "bfs", "dfs", "dijkstra",
            "quicksort", "merge sort", "recursion", "dynamic programming", "greedy"]
relations = ["Uses", "~Uses", "Generalizes", "~Generalizes", "Solves", "RelatedTo"]
seen = set()
paths = []
while len(paths) < 50:
    hops = rng.choice([1, 1, 2, 2, 3])
    path = [rng.choice(concepts)]
    for _ in range(hops):
        path.append(rng.choice(relations))
        path.append(rng.choice([c for c in concepts if c not in path]))
    key = tuple(path)
    if key in seen:
        continue
    seen.add(key)
    paths.append(path)
with open("paths.tsv", "w") as f:
    for p in paths:
        f.write("\t".join(p) + "\n")
