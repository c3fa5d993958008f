"""Coordinate machinery walkthrough: Equal Earth projection, geodesic
distances, GPS noise, and even sphere coverage.

Run with: python demos/01_projection_and_distance.py
"""

import numpy as np

from geoembed import (
    GpsCoord,
    eep_project,
    fibonacci_lattice,
    geodesic_distance_km,
    perturb_coord,
)
from geoembed.geodesy import coords_to_array, eep_project_array

print("== Equal Earth projection ==")
for name, coord in [
    ("origin", GpsCoord(0, 0)),
    ("new york", GpsCoord(40.71, -74.01)),
    ("sydney", GpsCoord(-33.87, 151.21)),
    ("north pole", GpsCoord(90, 0)),
]:
    p = eep_project(coord)
    print(f"  {name:10s} ({coord.lat_deg:7.2f}, {coord.lon_deg:8.2f}) -> "
          f"x={p.x:+.4f} y={p.y:+.4f}")

# The longitude axis spans exactly [-1, 1]; latitude is scaled by the same
# factor, so the map preserves the equal-area property of the projection.
grid = np.stack(
    np.meshgrid(np.arange(-90.0, 91.0, 3), np.arange(-180.0, 181.0, 3),
                indexing="ij"),
    axis=-1,
).reshape(-1, 2)
xy = eep_project_array(grid)
print(f"  global sweep: max|x|={np.abs(xy[:, 0]).max():.6f} "
      f"max|y|={np.abs(xy[:, 1]).max():.6f}")

print("\n== Geodesic distance (haversine, R=6371 km) ==")
pairs = [
    ("London-Paris", GpsCoord(51.507, -0.128), GpsCoord(48.857, 2.352)),
    ("equator 1 deg", GpsCoord(0, 0), GpsCoord(0, 1)),
    ("antipodes", GpsCoord(0, 0), GpsCoord(0, 180)),
]
for name, a, b in pairs:
    print(f"  {name:14s} {geodesic_distance_km(a, b):10.2f} km")

print("\n== GPS noise in meters ==")
rng = np.random.default_rng(0)
base = GpsCoord(48.857, 2.352)
for sigma in (150.0, 1000.0):
    dists = [
        geodesic_distance_km(base, perturb_coord(base, sigma, rng)) * 1000
        for _ in range(2000)
    ]
    print(f"  sigma={sigma:6.0f} m -> mean displacement {np.mean(dists):7.1f} m")

print("\n== Fibonacci lattice coverage ==")
for n in (100, 2000):
    pts = coords_to_array(fibonacci_lattice(n))
    print(f"  n={n:5d}: lat range [{pts[:, 0].min():+.1f}, {pts[:, 0].max():+.1f}], "
          f"mean lat {pts[:, 0].mean():+.3f}")
