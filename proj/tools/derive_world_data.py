#!/usr/bin/env python3
"""Derive data/registry.jsonl and data/borders.csv from the `countryinfo`
package (MIT; country records originate from the mledoze/countries dataset).

Usage: pip install countryinfo && python3 tools/derive_world_data.py [DATA_DIR]

Output is sorted and deterministic. Records that the upstream package ships
without name/ISO/centroid data are patched from PATCHES below; entries that
are not countries or territories in their own right are skipped.
"""
import json
import os
import sys

import countryinfo

# Upstream records missing core fields.
PATCHES = {
    "HU": {"name": "Hungary", "alpha3": "HUN", "latlng": [47.0, 20.0],
           "borders": ["AUT", "SVK", "UKR", "ROU", "SRB", "HRV", "SVN"], "alt": ["Magyarország"]},
    "MM": {"name": "Myanmar", "alpha3": "MMR", "latlng": [22.0, 98.0],
           "borders": ["BGD", "CHN", "IND", "LAO", "THA"], "alt": ["Burma"]},
    "VA": {"name": "Vatican City", "alpha3": "VAT", "latlng": [41.9, 12.45],
           "borders": ["ITA"], "alt": ["Holy See"]},
    "ME": {"name": "Montenegro", "alpha3": "MNE", "latlng": [42.5, 19.3],
           "borders": ["ALB", "BIH", "HRV", "SRB", "XKX"], "alt": ["Crna Gora"]},
    "AD": {"name": "Andorra", "alpha3": "AND", "latlng": [42.5, 1.5],
           "borders": ["FRA", "ESP"], "alt": ["Principality of Andorra"]},
    "XK": {"name": "Kosovo", "alpha3": "XKX", "latlng": [42.6, 20.9],
           "borders": ["ALB", "MKD", "MNE", "SRB"], "alt": ["Kosova"]},
    "VI": {"name": "United States Virgin Islands", "alpha3": "VIR", "latlng": [18.34, -64.93],
           "borders": [], "alt": ["US Virgin Islands"]},
    "VG": {"name": "British Virgin Islands", "alpha3": "VGB", "latlng": [18.43, -64.62],
           "borders": [], "alt": []},
    "CW": {"name": "Curaçao", "alpha3": "CUW", "latlng": [12.17, -68.98], "borders": [], "alt": ["Curacao"]},
    "SX": {"name": "Sint Maarten", "alpha3": "SXM", "latlng": [18.04, -63.05], "borders": ["MAF"], "alt": []},
    "MF": {"name": "Saint Martin", "alpha3": "MAF", "latlng": [18.08, -63.05], "borders": ["SXM"], "alt": []},
    "BQ": {"name": "Caribbean Netherlands", "alpha3": "BES", "latlng": [12.18, -68.25],
           "borders": [], "alt": ["Bonaire, Sint Eustatius and Saba"]},
    "BL": {"name": "Saint Barthélemy", "alpha3": "BLM", "latlng": [17.9, -62.83], "borders": [], "alt": []},
    "TC": {"name": "Turks and Caicos Islands", "alpha3": "TCA", "latlng": [21.75, -71.58], "borders": [], "alt": []},
    "AX": {"name": "Åland Islands", "alpha3": "ALA", "latlng": [60.12, 19.9], "borders": [], "alt": ["Aland Islands"]},
    "AQ": {"name": "Antarctica", "alpha3": "ATA", "latlng": [-90.0, 0.0],
           "borders": [], "alt": []},
}

SKIP_FILES = {
    "ashmore_and_cartier_island.json", "clipperton_island.json", "europa_island.json",
    "gaza_strip.json", "glorioso_islands.json", "ireland_northern.json", "jan_mayen.json",
    "jarvis_island.json", "johnston_atoll.json", "juan_de_nova_island.json",
    "midway_islands.json", "netherlands_antilles.json", "scotland.json",
    "virgin_islands.json", "wales.json", "west_bank.json",
    "burma.json", "hungary.json", "holy_see_vatican_city.json", "antarctica.json",
}


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "data"
    src = os.path.join(os.path.dirname(countryinfo.__file__), "data")
    entries = {}
    for fname in sorted(os.listdir(src)):
        if fname in SKIP_FILES:
            continue
        with open(os.path.join(src, fname), encoding="utf-8") as f:
            d = json.load(f)
        iso = d.get("ISO") or {}
        a2, a3 = iso.get("alpha2"), iso.get("alpha3")
        if not a2 or not a3 or "latlng" not in d or len(d["latlng"]) != 2:
            print("skipping", fname, file=sys.stderr)
            continue
        entries[a2.upper()] = {
            "name": d["name"], "alpha3": a3.upper(), "latlng": d["latlng"],
            "borders": d.get("borders") or [], "alt": d.get("altSpellings") or [],
        }
    for code, patch in PATCHES.items():
        entries[code] = patch

    a3_to_a2 = {e["alpha3"]: c for c, e in entries.items()}
    a3_to_a2["KOS"] = "XK"
    edges = set()
    for code, e in entries.items():
        for b in e["borders"]:
            other = a3_to_a2.get(b.upper())
            if other is None:
                print(f"{code}: unresolved border {b}", file=sys.stderr)
                continue
            if other != code:
                edges.add(tuple(sorted((code, other))))

    degree = {c: 0 for c in entries}
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1

    seen_alias = set()
    with open(os.path.join(out_dir, "registry.jsonl"), "w", encoding="utf-8") as f:
        for code in sorted(entries):
            e = entries[code]
            keys = {code.casefold(), e["name"].casefold()}
            aliases = []
            for alias in [e["alpha3"]] + list(e["alt"]):
                k = alias.strip().casefold()
                if not k or k in keys or k in seen_alias:
                    continue
                keys.add(k)
                aliases.append(alias.strip())
            seen_alias |= keys
            lat, lon = float(e["latlng"][0]), float(e["latlng"][1])
            if lon <= -180.0:
                lon += 360.0
            rec = {"code": code, "name": e["name"], "aliases": aliases,
                   "lat": lat, "lon": lon, "island": degree[code] == 0}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")

    # Pairs declared in special_edges.csv carry that provenance instead.
    special = set()
    special_path = os.path.join(out_dir, "special_edges.csv")
    if os.path.exists(special_path):
        with open(special_path, encoding="utf-8") as f:
            for line in f.read().splitlines()[1:]:
                special.add(tuple(sorted(line.strip().split(","))))
    edges -= special

    with open(os.path.join(out_dir, "borders.csv"), "w", encoding="utf-8") as f:
        f.write("code_a,code_b\n")
        for a, b in sorted(edges):
            f.write(f"{a},{b}\n")
    print(f"{len(entries)} entries, {len(edges)} border edges", file=sys.stderr)


if __name__ == "__main__":
    main()
