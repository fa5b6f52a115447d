"""Recomputes the end-to-end fixture metrics from the raw inputs and checks a
geoeval output directory against them.

    python3 tools/verify_e2e_fixture.py <output dir>

Shares no code with the engine: parsing, matching, BFS, k-NN, GER, zero-shot
labels and stratified accuracy are all redone here with numpy.
"""

import csv
import json
import math
import pathlib
import sys
from collections import deque

import numpy as np

FIX = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "e2e"
BIOMES = ["Tropical", "Arid", "Temperate", "Mediterranean", "Tundra", "Boreal"]
K, TAU = 5, 2
R = 6371.0088


def pct(x):
    return "n/a" if x is None else f"{math.floor(x * 10000 + 0.5 + 1e-7) / 100:.2f}"


def extract(raw):
    found_obj = False
    dec = json.JSONDecoder()
    for i, ch in enumerate(raw):
        if ch != "{":
            continue
        try:
            obj, _ = dec.raw_decode(raw, i)
        except ValueError:
            continue
        if not isinstance(obj, dict):
            continue
        found_obj = True
        p = obj.get("predictions")
        if isinstance(p, list) and all(isinstance(x, str) for x in p):
            return "ok", p
    return ("key_missing" if found_obj and not any_key(raw) else "parse_failed"), []


def any_key(raw):
    dec = json.JSONDecoder()
    for i, ch in enumerate(raw):
        if ch == "{":
            try:
                obj, _ = dec.raw_decode(raw, i)
            except ValueError:
                continue
            if isinstance(obj, dict) and "predictions" in obj:
                return True
    return False


def load_gemb(stem):
    b = (FIX / f"{stem}.gemb").read_bytes()
    dim = int.from_bytes(b[8:12], "little")
    n = int.from_bytes(b[12:20], "little")
    m = np.frombuffer(b[20:], dtype="<f4").reshape(n, dim).astype(np.float64)
    ids = (FIX / f"{stem}.ids").read_text().split()
    return ids, m / np.linalg.norm(m, axis=1, keepdims=True)


def haversine(a, b):
    la1, lo1, la2, lo2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = math.sin((la2 - la1) / 2) ** 2 + math.cos(la1) * math.cos(la2) * math.sin((lo2 - lo1) / 2) ** 2
    return 2 * R * math.asin(math.sqrt(h))


def mean_std(v):
    m = sum(v) / len(v)
    return m, math.sqrt(sum((x - m) ** 2 for x in v) / len(v))


def accuracy(ids, truth, preds):
    if not ids:
        return None, None
    t1 = sum(1 for i in ids if preds[i][:1] == [truth[i]]) / len(ids)
    t5 = sum(1 for i in ids if truth[i] in preds[i][:5]) / len(ids)
    return t1, t5


def main(out):
    out = pathlib.Path(out)
    registry = [json.loads(l) for l in (FIX / "registry.jsonl").read_text().splitlines()]
    rows = list(csv.DictReader(open(FIX / "manifest.csv")))
    truth = {r["sample_id"]: r["country"] for r in rows}
    order = [r["sample_id"] for r in rows]
    label_space = {r["name"].lower(): r["code"] for r in registry if r["code"] in set(truth.values())}

    preds = {}
    for f in ("predictions_a.jsonl", "predictions_b.jsonl"):
        for line in (FIX / f).read_text().splitlines():
            rec = json.loads(line)
            _, names = extract(rec["raw_output"] or "")
            codes = []
            for n in names:
                c = label_space.get(n.strip(" \t\r\n").lower())
                if c and c not in codes:
                    codes.append(c)
            preds.setdefault((rec["model"], rec["setting"]), {})[rec["sample_id"]] = codes[:5]

    expected = {}
    for key, p in preds.items():
        expected[("accuracy",) + key] = tuple(map(pct, accuracy(order, truth, p)))

    # Graph: borders, island bridge, then closest-pair bridges.
    codes = sorted(r["code"] for r in registry)
    cent = {r["code"]: (r["lat"], r["lon"]) for r in registry}
    adj = {c: set() for c in codes}
    for line in (FIX / "borders.csv").read_text().splitlines()[1:]:
        a, b = line.split(",")
        adj[a].add(b)
        adj[b].add(a)
    for r in sorted(registry, key=lambda r: r["code"]):
        if r.get("island") and not adj[r["code"]]:
            best = min((c for c in codes if c != r["code"]), key=lambda c: (haversine(cent[r["code"]], cent[c]), c))
            adj[r["code"]].add(best)
            adj[best].add(r["code"])

    def bfs(src):
        d = {src: 0}
        q = deque([src])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if v not in d:
                    d[v] = d[u] + 1
                    q.append(v)
        return d

    assert len(bfs(codes[0])) == len(codes), "fixture graph should be connected after the island bridge"
    for key, p in preds.items():
        h = [0, 0, 0]
        un = 0
        err = 0
        for i in order:
            if p[i][:1] == [truth[i]]:
                continue
            err += 1
            if not p[i]:
                un += 1
                continue
            hops = bfs(p[i][0])[truth[i]]
            h[min(hops, 3) - 1] += 1
        placed = sum(h)
        expected[("hop",) + key] = (str(err), str(un)) + tuple(pct(x / placed if placed else None) for x in h)

    # k-NN and GER per encoder.
    ger_vals = {}
    for enc in ("clip", "siglip"):
        ids, m = load_gemb(enc)
        sims = m @ m.T
        nbrs = {}
        for qi, q in enumerate(ids):
            cand = sorted((j for j in range(len(ids)) if j != qi), key=lambda j: (-sims[qi, j], ids[j]))[:K]
            nbrs[q] = [ids[j] for j in cand]
        for key, p in preds.items():
            e = [i for i in order if p[i] and p[i][0] != truth[i]]
            cs = [sum(truth[n] == p[i][0] for n in nbrs[i]) for i in e]
            weak = sum(c >= 1 for c in cs) / len(e) if e else None
            strong = sum(c >= TAU for c in cs) / len(e) if e else None
            ger_vals.setdefault(key, []).append((weak, strong))
            expected[("ger",) + key + (enc,)] = (str(len(e)), pct(weak), pct(strong))
    for key, vals in ger_vals.items():
        w = mean_std([v[0] for v in vals])
        s = mean_std([v[1] for v in vals])
        expected[("ger_aggregate",) + key] = (pct(w[0]), pct(w[1]), pct(s[0]), pct(s[1]))

    # Labellers: two zero-shot encoders plus the imported one.
    labels = {}
    for enc in ("clip", "siglip"):
        ids, m = load_gemb(enc)
        _, ur = load_gemb(f"{enc}_ur")
        _, bi = load_gemb(f"{enc}_biome")
        labels[enc] = {}
        for i, sid in enumerate(ids):
            labels[enc][sid] = (["urban", "rural"][int(np.argmax(ur @ m[i]))], BIOMES[int(np.argmax(bi @ m[i]))])
    labels["vlm-labeller"] = {}
    for line in (FIX / "labels.jsonl").read_text().splitlines():
        rec = json.loads(line)
        labels["vlm-labeller"][rec["sample_id"]] = (rec["urban_rural"], rec["biome"])

    consensus = {i: labels["clip"][i][1] for i in order
                 if len({labels[l][i][1] for l in labels}) == 1}
    expected[("consensus",)] = (str(len(consensus)),)
    for key, p in preds.items():
        for stratum in ("urban", "rural"):
            t1s, t5s = [], []
            for l in labels:
                members = [i for i in order if labels[l][i][0] == stratum]
                t1, t5 = accuracy(members, truth, p)
                if t1 is not None:
                    t1s.append(t1)
                    t5s.append(t5)
            a, b = mean_std(t1s)
            c, d = mean_std(t5s)
            expected[("urban_rural",) + key + (stratum,)] = (pct(a), pct(b), pct(c), pct(d))
        for biome in BIOMES:
            members = [i for i in order if consensus.get(i) == biome]
            expected[("biome",) + key + (biome,)] = (str(len(members)),) + tuple(map(pct, accuracy(members, truth, p)))

    got = {}
    for r in csv.DictReader(open(out / "accuracy.csv")):
        got[("accuracy", r["model"], r["setting"])] = (r["top1"], r["top5"])
    for r in csv.DictReader(open(out / "hop.csv")):
        got[("hop", r["model"], r["setting"])] = (r["n_errors"], r["n_unplaceable"], r["h1_pct"], r["h2_pct"], r["h3_plus_pct"])
    for r in csv.DictReader(open(out / "ger.csv")):
        got[("ger", r["model"], r["setting"], r["encoder"])] = (r["n_errors"], r["ger_weak"], r["ger_strong"])
    for r in csv.DictReader(open(out / "ger_aggregate.csv")):
        got[("ger_aggregate", r["model"], r["setting"])] = (
            r["ger_weak_mean"], r["ger_weak_std"], r["ger_strong_mean"], r["ger_strong_std"])
    for r in csv.DictReader(open(out / "urban_rural_summary.csv")):
        got[("urban_rural", r["model"], r["setting"], r["stratum"])] = (
            r["top1_mean"], r["top1_std"], r["top5_mean"], r["top5_std"])
    for r in csv.DictReader(open(out / "biome.csv")):
        got[("biome", r["model"], r["setting"], r["biome"])] = (r["n_samples"], r["top1"], r["top5"])
    got[("consensus",)] = (str(sum(1 for _ in open(out / "consensus.jsonl"))),)

    bad = 0
    for k in sorted(set(expected) | set(got)):
        if expected.get(k) != got.get(k):
            bad += 1
            print("MISMATCH", k, "expected", expected.get(k), "got", got.get(k))
    print(f"{len(expected)} cells checked, {bad} mismatches")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1]))
