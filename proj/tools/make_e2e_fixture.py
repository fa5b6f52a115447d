"""Writes the end-to-end fixture under tests/fixtures/e2e.

Twelve samples across France, Spain and Portugal; Belgium, Germany and
Iceland exist only in the registry. Two 8-d encoders with prompt
embeddings, plus one imported labeller.
"""

import json
import pathlib
import struct

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "e2e"
DIM = 8
BIOMES = ["Tropical", "Arid", "Temperate", "Mediterranean", "Tundra", "Boreal"]

REGISTRY = [
    {"code": "BE", "name": "Belgium", "aliases": ["BEL"], "lat": 50.8, "lon": 4.5},
    {"code": "DE", "name": "Germany", "aliases": ["DEU"], "lat": 51.0, "lon": 10.0},
    {"code": "ES", "name": "Spain", "aliases": ["ESP", "España"], "lat": 40.4, "lon": -3.7},
    {"code": "FR", "name": "France", "aliases": ["FRA"], "lat": 46.6, "lon": 2.4},
    {"code": "IS", "name": "Iceland", "aliases": ["ISL"], "lat": 65.0, "lon": -18.0, "island": True},
    {"code": "PT", "name": "Portugal", "aliases": ["PRT"], "lat": 39.5, "lon": -8.0},
]
BORDERS = [("ES", "FR"), ("ES", "PT"), ("BE", "FR"), ("BE", "DE")]

SAMPLES = [(f"img{i:02d}", c) for i, c in enumerate(["FR"] * 4 + ["ES"] * 4 + ["PT"] * 4)]

# (unconstrained, constrained) raw outputs per sample for model vlm-a.
RAW_A = [
    ('{"predictions": ["France", "Belgium", "Spain", "Germany", "Italy"]}', '{"predictions": ["France", "Spain", "Portugal"]}'),
    ('Looks French. {"predictions": ["spain", "France"]}', '{"predictions": ["Spain", "France", "Portugal"]}'),
    ('{"predictions": ["Portugal", "Spain", "France"]}', '{"predictions": ["Portugal", "France"]}'),
    ('{"answer": ["France"]}', '{"predictions": ["FRANCE"]}'),
    ('{"predictions": ["Spain", "Portugal"]}', '{"predictions": ["Spain"]}'),
    ('{"predictions": ["France", "Spain"]}', '{"predictions": ["Portugal", "Spain"]}'),
    ('{"predictions": ["Portugal", "Portugal", "Spain"]}', '{"predictions": ["Spain", "Portugal"]}'),
    ('I cannot tell.', '{"predictions": ["France", "Portugal", "Spain"]}'),
    ('{"predictions": ["Portugal"]}', '{"predictions": ["Portugal"]}'),
    ('{"predictions": ["Spain", "Portugal", "France"]}', '{"predictions": ["Spain", "Portugal"]}'),
    ('{"predictions": ["Brazil", "Portugal"]}', '{"predictions": ["Portugal", "Spain"]}'),
    ('{"predictions": ["France", "Belgium"]}', '{"predictions": ["France", "Spain"]}'),
]
# Unconstrained only, model vlm-b.
RAW_B = [
    '{"predictions": ["Spain"]}',
    '{"predictions": ["France"]}',
    '{"predictions": ["France"]}',
    '{"predictions": ["France"]}',
    '{"predictions": ["Spain"]}',
    '{"predictions": ["Spain"]}',
    '{"predictions": ["Spain"]}',
    '{"predictions": ["Spain"]}',
    '{"predictions": ["Spain", "Portugal"]}',
    '{"predictions": ["Portugal"]}',
    '{"predictions": ["Portugal"]}',
    '',
]

# Imported labeller: urban/rural and biome per sample.
VLM_LABELS = [
    ("urban", "Temperate"), ("urban", "Temperate"), ("rural", "Temperate"), ("rural", "Boreal"),
    ("urban", "Mediterranean"), ("rural", "Arid"), ("rural", "Arid"), ("urban", "Mediterranean"),
    ("rural", "Mediterranean"), ("urban", "Mediterranean"), ("rural", "Temperate"), ("urban", "Arid"),
]


def write_gemb(stem, ids, matrix):
    m = np.asarray(matrix, dtype="<f4")
    with open(OUT / f"{stem}.gemb", "wb") as f:
        f.write(b"GEMB" + struct.pack("<IIQ", 1, m.shape[1], m.shape[0]) + m.tobytes())
    (OUT / f"{stem}.ids").write_text("".join(i + "\n" for i in ids))


def encoder(rng, name):
    country_axis = {c: rng.normal(size=DIM) for c in ("FR", "ES", "PT")}
    biome_prompts = rng.normal(size=(6, DIM))
    ur_prompts = rng.normal(size=(2, DIM))
    images = []
    for i, (_, c) in enumerate(SAMPLES):
        _, biome = VLM_LABELS[i]
        ur = VLM_LABELS[i][0]
        v = 1.2 * country_axis[c] + 0.8 * biome_prompts[BIOMES.index(biome)]
        v += 0.6 * ur_prompts[0 if ur == "urban" else 1] + 0.9 * rng.normal(size=DIM)
        images.append(v)
    write_gemb(name, [s for s, _ in SAMPLES], images)
    write_gemb(f"{name}_ur", ["urban", "rural"], ur_prompts)
    write_gemb(f"{name}_biome", BIOMES, biome_prompts)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240611)
    (OUT / "registry.jsonl").write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in REGISTRY))
    (OUT / "borders.csv").write_text("code_a,code_b\n" + "".join(f"{a},{b}\n" for a, b in BORDERS))
    (OUT / "manifest.csv").write_text(
        "sample_id,country,dataset\n" + "".join(f"{s},{c},fixture\n" for s, c in SAMPLES))
    rows = []
    for (sid, _), (u, c) in zip(SAMPLES, RAW_A):
        rows.append({"sample_id": sid, "model": "vlm-a", "setting": "unconstrained", "raw_output": u})
        rows.append({"sample_id": sid, "model": "vlm-a", "setting": "constrained", "raw_output": c})
    (OUT / "predictions_a.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))
    rows = [{"sample_id": sid, "model": "vlm-b", "setting": "unconstrained", "raw_output": raw}
            for (sid, _), raw in zip(SAMPLES, RAW_B)]
    rows[-1]["raw_output"] = None
    (OUT / "predictions_b.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))
    (OUT / "labels.jsonl").write_text("".join(
        json.dumps({"sample_id": sid, "labeller": "vlm-labeller", "urban_rural": ur, "biome": b}) + "\n"
        for (sid, _), (ur, b) in zip(SAMPLES, VLM_LABELS)))
    encoder(rng, "clip")
    encoder(rng, "siglip")
    (OUT / "config.toml").write_text(
        "# End-to-end fixture: 12 samples, 3 countries, 2 encoders, 3 labellers.\n"
        'manifest = "manifest.csv"\n'
        'registry = "registry.jsonl"\n'
        'borders = "borders.csv"\n'
        'predictions = ["predictions_a.jsonl", "predictions_b.jsonl"]\n'
        'labels = ["labels.jsonl"]\n'
        "k = 5\n"
        "tau = 2\n"
        "\n[embeddings.clip]\n"
        'gemb = "clip.gemb"\n'
        'urban_rural_prompts = "clip_ur.gemb"\n'
        'biome_prompts = "clip_biome.gemb"\n'
        "\n[embeddings.siglip]\n"
        'gemb = "siglip.gemb"\n'
        'urban_rural_prompts = "siglip_ur.gemb"\n'
        'biome_prompts = "siglip_biome.gemb"\n')


if __name__ == "__main__":
    main()
