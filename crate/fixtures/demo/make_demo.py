#!/usr/bin/env python3
"""Builds the small synthetic demo dataset: corpus.json, kb.tsv,
embeddings.txt and labels.tsv. Deterministic (fixed seed).

Four topics each get a random direction. Topic concepts sit near their
direction; "borderline" concepts mix a topic with noise; off-topic concepts
are random. Labels: topic concepts are related (1), the rest are not (0).
"""
import json
import math
import random

rng = random.Random(2024)
DIM = 12

TOPICS = {
    "sorting": ["quicksort", "merge_sort", "heapsort", "insertion_sort", "bubble_sort", "radix_sort",
                "counting_sort", "selection_sort", "shell_sort", "timsort", "bucket_sort", "partition_scheme",
                "stable_sort", "comparison_sort"],
    "graphs": ["bfs", "dfs", "dijkstra", "bellman_ford", "topological_sort", "minimum_spanning_tree",
               "kruskal", "prim", "floyd_warshall", "adjacency_list", "strongly_connected_component",
               "shortest_path", "graph_cycle", "bipartite_graph"],
    "trees": ["binary_tree", "bst", "avl_tree", "red_black_tree", "b_tree", "heap", "trie", "segment_tree",
              "tree_traversal", "tree_rotation", "fenwick_tree", "splay_tree", "treap", "tree_height"],
    "dp": ["dynamic_programming", "memoization", "knapsack", "longest_common_subsequence", "edit_distance",
           "optimal_substructure", "overlapping_subproblems", "coin_change", "matrix_chain", "rod_cutting",
           "bellman_equation", "tabulation", "subset_sum", "longest_increasing_subsequence"],
}
OFF_TOPIC = ["roman_empire", "impressionism", "photosynthesis", "plate_tectonics", "jazz", "baroque",
             "volcano", "mitochondria", "renaissance", "opera", "glacier", "feudalism", "sonnet",
             "cubism", "monsoon", "enzyme", "pyramid", "haiku", "tundra", "symphony"]
BORDERLINE = {
    "sorting": ["library_catalog", "card_game", "alphabet", "queue_at_bank"],
    "graphs": ["road_trip", "social_network", "subway_map", "power_grid"],
    "trees": ["family_tree", "forest_ecology", "org_chart", "river_delta"],
    "dp": ["budget_planning", "chess_opening", "diet_plan", "travel_itinerary"],
}
RELATIONS = ["Uses", "InstanceOf", "RelatedTo", "PartOf"]


def unit(v):
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def gauss():
    return [rng.gauss(0, 1 / math.sqrt(DIM)) for _ in range(DIM)]


directions = {t: unit(gauss()) for t in TOPICS}
vectors = {}
for topic, names in TOPICS.items():
    for i, name in enumerate(names):
        # course concepts (the first four) are spread wider than the rest
        spread = 0.6 if i < 4 else 0.15 + 0.03 * i
        vectors[name] = unit([d + spread * g for d, g in zip(directions[topic], gauss())])
for topic, names in BORDERLINE.items():
    for name in names:
        vectors[name] = unit([d + 0.5 * g for d, g in zip(directions[topic], gauss())])
for name in OFF_TOPIC:
    vectors[name] = unit(gauss())

triples = set()
for topic, names in TOPICS.items():
    for i, name in enumerate(names):
        for other in rng.sample([n for n in names if n != name], 2):
            triples.add((name, rng.choice(RELATIONS), other))
    for name in BORDERLINE[topic]:
        for other in rng.sample(names[:8], 3):
            triples.add((other, "RelatedTo", name))
        triples.add((name, "RelatedTo", rng.choice(OFF_TOPIC)))
for name in OFF_TOPIC:
    triples.add((name, "RelatedTo", rng.choice(OFF_TOPIC + sum(TOPICS.values(), []))))

course_concepts = {t: names[:4] for t, names in TOPICS.items()}
courses = [
    ("algorithms", "Algorithms", ["sorting", "graphs", "dp"]),
    ("data_structures", "Data Structures", ["trees", "graphs"]),
]
corpus = {"courses": []}
for cid, title, topics in courses:
    ids = [c for t in topics for c in course_concepts[t]]
    conf = {c: round(0.95 - 0.03 * i, 2) for i, c in enumerate(ids)}
    videos = []
    for pos, t in enumerate(topics):
        cs = course_concepts[t]
        videos.append({"id": f"{cid}-v{2 * pos + 1}", "position": 2 * pos + 1, "concepts": cs[:2]})
        videos.append({"id": f"{cid}-v{2 * pos + 2}", "position": 2 * pos + 2, "concepts": cs[1:]})
    videos.append({"id": f"{cid}-intro", "position": 100, "concepts": []})
    corpus["courses"].append({
        "id": cid,
        "title": title,
        "videos": videos,
        "course_concepts": [{"id": c, "confidence": conf[c]} for c in ids],
    })

with open("corpus.json", "w") as f:
    json.dump(corpus, f, indent=1)
    f.write("\n")
with open("kb.tsv", "w") as f:
    for h, r, t in sorted(triples):
        f.write(f"{h}\t{r}\t{t}\n")
with open("embeddings.txt", "w") as f:
    for name in sorted(vectors):
        f.write(name + " " + " ".join(f"{x:.6f}" for x in vectors[name]) + "\n")
with open("labels.tsv", "w") as f:
    # Splits cycle train, train, val, test within each class so every split
    # sees both classes.
    course = {c for cs in course_concepts.values() for c in cs}
    seen = {0: 0, 1: 0}
    for name in sorted(vectors):
        if name in course:
            continue
        related = int(any(name in names for names in TOPICS.values()))
        split = ["train", "train", "val", "test"][seen[related] % 4]
        seen[related] += 1
        f.write(f"{name}\t{related}\t{split}\n")
