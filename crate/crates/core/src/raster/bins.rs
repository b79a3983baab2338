use crate::raster::project::SplatProjection;

/// Per-tile splat lists in front-to-back order.
#[derive(Debug, Clone, PartialEq)]
pub struct TileBins {
    pub tile_size: usize,
    pub width: usize,
    pub height: usize,
    pub tiles_x: usize,
    pub tiles_y: usize,
    /// Indices into the projection list, one vector per tile (row-major).
    pub lists: Vec<Vec<u32>>,
}

impl TileBins {
    pub fn tile(&self, tx: usize, ty: usize) -> &[u32] {
        &self.lists[ty * self.tiles_x + tx]
    }

    /// Pixel rectangle `[x0, y0, x1, y1)` of tile `t`.
    pub fn tile_rect(&self, t: usize) -> [usize; 4] {
        let (tx, ty) = (t % self.tiles_x, t / self.tiles_x);
        let x0 = tx * self.tile_size;
        let y0 = ty * self.tile_size;
        [
            x0,
            y0,
            (x0 + self.tile_size).min(self.width),
            (y0 + self.tile_size).min(self.height),
        ]
    }
}

/// Global depth order: ascending depth, ties by lower Gaussian index.
pub fn depth_order(projections: &[SplatProjection]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..projections.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        let (pa, pb) = (&projections[a as usize], &projections[b as usize]);
        pa.depth
            .total_cmp(&pb.depth)
            .then(pa.index.cmp(&pb.index))
    });
    order
}

/// Sorts all splats once by depth, then appends each to every tile its
/// footprint touches, so each tile list inherits the global order.
pub fn bin_and_sort(
    projections: &[SplatProjection],
    width: usize,
    height: usize,
    tile_size: usize,
) -> TileBins {
    let tiles_x = width.div_ceil(tile_size);
    let tiles_y = height.div_ceil(tile_size);
    let mut lists = vec![Vec::new(); tiles_x * tiles_y];
    for id in depth_order(projections) {
        let b = projections[id as usize].bounds;
        let (tx0, ty0) = (b[0] as usize / tile_size, b[1] as usize / tile_size);
        let (tx1, ty1) = (b[2] as usize / tile_size, b[3] as usize / tile_size);
        for ty in ty0..=ty1 {
            for tx in tx0..=tx1 {
                lists[ty * tiles_x + tx].push(id);
            }
        }
    }
    TileBins {
        tile_size,
        width,
        height,
        tiles_x,
        tiles_y,
        lists,
    }
}
