#!/usr/bin/env python3
"""Regenerate the bundled world placement and city-latency files.

The shipped dataset is a synthetic stand-in with the same shape as a global
ping survey: 246 miners spread over real city locations (94 EU, 83 NA, 37 AS,
12 SA, 11 AF, 9 AU), with round-trip times modeled from great-circle distance
plus a deterministic per-pair routing inflation.  The distance coefficient is
calibrated so the median one-way link delay over a degree-6 random overlay
lands near 69 ms.

Usage: python tools/gen_world_data.py [outdir]
"""

import csv
import math
import sys
from pathlib import Path

import numpy as np

SEED = 20200719

# name, continent, latitude, longitude (coarse)
CITIES = [
    ("London", "EU", 51.51, -0.13), ("Paris", "EU", 48.86, 2.35),
    ("Berlin", "EU", 52.52, 13.40), ("Madrid", "EU", 40.42, -3.70),
    ("Rome", "EU", 41.90, 12.50), ("Amsterdam", "EU", 52.37, 4.90),
    ("Frankfurt", "EU", 50.11, 8.68), ("Warsaw", "EU", 52.23, 21.01),
    ("Stockholm", "EU", 59.33, 18.07), ("Moscow", "EU", 55.76, 37.62),
    ("Kyiv", "EU", 50.45, 30.52), ("Zurich", "EU", 47.37, 8.54),
    ("Vienna", "EU", 48.21, 16.37), ("Dublin", "EU", 53.35, -6.26),
    ("Lisbon", "EU", 38.72, -9.14), ("Prague", "EU", 50.08, 14.44),
    ("Budapest", "EU", 47.50, 19.04), ("Bucharest", "EU", 44.43, 26.10),
    ("Athens", "EU", 37.98, 23.73), ("Helsinki", "EU", 60.17, 24.94),
    ("Oslo", "EU", 59.91, 10.75), ("Copenhagen", "EU", 55.68, 12.57),
    ("Brussels", "EU", 50.85, 4.35), ("Milan", "EU", 45.46, 9.19),
    ("Barcelona", "EU", 41.39, 2.17), ("Munich", "EU", 48.14, 11.58),
    ("Hamburg", "EU", 53.55, 9.99), ("Manchester", "EU", 53.48, -2.24),
    ("Edinburgh", "EU", 55.95, -3.19), ("Saint Petersburg", "EU", 59.93, 30.34),
    ("Minsk", "EU", 53.90, 27.57), ("Riga", "EU", 56.95, 24.11),
    ("Vilnius", "EU", 54.69, 25.28), ("Tallinn", "EU", 59.44, 24.75),
    ("Sofia", "EU", 42.70, 23.32), ("Belgrade", "EU", 44.79, 20.45),
    ("Zagreb", "EU", 45.81, 15.98), ("Ljubljana", "EU", 46.06, 14.51),
    ("Bratislava", "EU", 48.15, 17.11), ("Luxembourg", "EU", 49.61, 6.13),
    ("Geneva", "EU", 46.20, 6.14), ("Lyon", "EU", 45.76, 4.84),
    ("Marseille", "EU", 43.30, 5.37), ("Porto", "EU", 41.15, -8.61),
    ("Valencia", "EU", 39.47, -0.38), ("Krakow", "EU", 50.06, 19.94),
    ("Reykjavik", "EU", 64.15, -21.94),
    ("New York", "NA", 40.71, -74.01), ("Los Angeles", "NA", 34.05, -118.24),
    ("Chicago", "NA", 41.88, -87.63), ("Toronto", "NA", 43.65, -79.38),
    ("Montreal", "NA", 45.50, -73.57), ("Vancouver", "NA", 49.28, -123.12),
    ("San Francisco", "NA", 37.77, -122.42), ("Seattle", "NA", 47.61, -122.33),
    ("Dallas", "NA", 32.78, -96.80), ("Houston", "NA", 29.76, -95.37),
    ("Miami", "NA", 25.76, -80.19), ("Atlanta", "NA", 33.75, -84.39),
    ("Boston", "NA", 42.36, -71.06), ("Washington", "NA", 38.91, -77.04),
    ("Denver", "NA", 39.74, -104.99), ("Phoenix", "NA", 33.45, -112.07),
    ("Mexico City", "NA", 19.43, -99.13), ("Guadalajara", "NA", 20.67, -103.35),
    ("Monterrey", "NA", 25.67, -100.31), ("Minneapolis", "NA", 44.98, -93.27),
    ("Detroit", "NA", 42.33, -83.05), ("Philadelphia", "NA", 39.95, -75.17),
    ("Salt Lake City", "NA", 40.76, -111.89), ("Las Vegas", "NA", 36.17, -115.14),
    ("San Diego", "NA", 32.72, -117.16), ("Portland", "NA", 45.52, -122.68),
    ("Kansas City", "NA", 39.10, -94.58), ("St Louis", "NA", 38.63, -90.20),
    ("Charlotte", "NA", 35.23, -80.84), ("Calgary", "NA", 51.05, -114.07),
    ("Ottawa", "NA", 45.42, -75.70), ("Edmonton", "NA", 53.55, -113.49),
    ("Austin", "NA", 30.27, -97.74), ("Panama City", "NA", 8.98, -79.52),
    ("Havana", "NA", 23.11, -82.37), ("Guatemala City", "NA", 14.63, -90.55),
    ("Tokyo", "AS", 35.68, 139.69), ("Singapore", "AS", 1.35, 103.82),
    ("Hong Kong", "AS", 22.32, 114.17), ("Seoul", "AS", 37.57, 126.98),
    ("Shanghai", "AS", 31.23, 121.47), ("Beijing", "AS", 39.90, 116.40),
    ("Mumbai", "AS", 19.08, 72.88), ("Delhi", "AS", 28.61, 77.21),
    ("Bangalore", "AS", 12.97, 77.59), ("Dubai", "AS", 25.20, 55.27),
    ("Tel Aviv", "AS", 32.07, 34.78), ("Istanbul", "AS", 41.01, 28.98),
    ("Bangkok", "AS", 13.76, 100.50), ("Jakarta", "AS", -6.21, 106.85),
    ("Manila", "AS", 14.60, 120.98), ("Kuala Lumpur", "AS", 3.14, 101.69),
    ("Taipei", "AS", 25.03, 121.57), ("Osaka", "AS", 34.69, 135.50),
    ("Karachi", "AS", 24.86, 67.01), ("Riyadh", "AS", 24.71, 46.68),
    ("Almaty", "AS", 43.24, 76.89), ("Novosibirsk", "AS", 55.03, 82.92),
    ("Ho Chi Minh City", "AS", 10.82, 106.63), ("Chennai", "AS", 13.08, 80.27),
    ("Sao Paulo", "SA", -23.55, -46.63), ("Rio de Janeiro", "SA", -22.91, -43.17),
    ("Buenos Aires", "SA", -34.60, -58.38), ("Santiago", "SA", -33.45, -70.67),
    ("Lima", "SA", -12.05, -77.04), ("Bogota", "SA", 4.71, -74.07),
    ("Caracas", "SA", 10.48, -66.90), ("Quito", "SA", -0.18, -78.47),
    ("Montevideo", "SA", -34.90, -56.16), ("La Paz", "SA", -16.50, -68.15),
    ("Asuncion", "SA", -25.26, -57.58), ("Porto Alegre", "SA", -30.03, -51.23),
    ("Johannesburg", "AF", -26.20, 28.05), ("Cape Town", "AF", -33.92, 18.42),
    ("Cairo", "AF", 30.04, 31.24), ("Lagos", "AF", 6.52, 3.38),
    ("Nairobi", "AF", -1.29, 36.82), ("Casablanca", "AF", 33.57, -7.59),
    ("Tunis", "AF", 36.81, 10.17), ("Accra", "AF", 5.60, -0.19),
    ("Addis Ababa", "AF", 9.01, 38.75), ("Dakar", "AF", 14.72, -17.47),
    ("Algiers", "AF", 36.75, 3.06),
    ("Sydney", "AU", -33.87, 151.21), ("Melbourne", "AU", -37.81, 144.96),
    ("Brisbane", "AU", -27.47, 153.03), ("Perth", "AU", -31.95, 115.86),
    ("Adelaide", "AU", -34.93, 138.60), ("Auckland", "AU", -36.85, 174.76),
    ("Wellington", "AU", -41.29, 174.78), ("Canberra", "AU", -35.28, 149.13),
]

MINERS_PER_CONTINENT = {"EU": 94, "NA": 83, "AS": 37, "SA": 12, "AF": 11, "AU": 9}

# One-way delay model: OVERHEAD + dist_km * KM_COEF * inflation(pair).
OVERHEAD_MS = 4.0
KM_COEF = 0.0070
INFLATION_RANGE = (1.05, 1.45)


def haversine_km(lat1, lon1, lat2, lon2):
    rad = math.pi / 180.0
    phi1, phi2 = lat1 * rad, lat2 * rad
    dphi = (lat2 - lat1) * rad
    dlmb = (lon2 - lon1) * rad
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * 6371.0 * math.asin(math.sqrt(a))


def build_placement():
    rows = []
    miner_id = 0
    for cont, want in MINERS_PER_CONTINENT.items():
        cities = [c for c in CITIES if c[1] == cont]
        for k in range(want):
            rows.append((miner_id, cities[k % len(cities)][0], cont))
            miner_id += 1
    return rows


def build_latency():
    rng = np.random.default_rng(SEED)
    rows = []
    for i in range(len(CITIES)):
        for j in range(i + 1, len(CITIES)):
            n1, _, la1, lo1 = CITIES[i]
            n2, _, la2, lo2 = CITIES[j]
            dist = haversine_km(la1, lo1, la2, lo2)
            inflation = rng.uniform(*INFLATION_RANGE)
            one_way = OVERHEAD_MS + dist * KM_COEF * inflation
            rows.append((n1, n2, round(2 * one_way, 1)))
    return rows


def main():
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "src" / "powsim" / "data"
    outdir.mkdir(parents=True, exist_ok=True)

    placement = build_placement()
    with open(outdir / "world_placement.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["miner_id", "city", "continent"])
        w.writerows(placement)

    latency = build_latency()
    with open(outdir / "world_latency.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "destination", "avg_rtt_ms"])
        w.writerows(latency)

    print(f"wrote {len(placement)} miners over {len(CITIES)} cities, {len(latency)} city pairs -> {outdir}")


if __name__ == "__main__":
    main()
