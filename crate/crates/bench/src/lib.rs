//! Benchmark fixtures shared by the criterion targets.

use fraclayer::SurfaceMesh;

/// Unit sphere mesh with the usual `2:1` longitude-to-latitude ratio.
pub fn unit_sphere(nlat: usize) -> SurfaceMesh {
    SurfaceMesh::sphere(1.0, [0.0; 3], nlat, 2 * nlat).expect("valid resolution")
}
