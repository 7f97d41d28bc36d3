use crate::raster::GrayImage;

/// Adaptive-threshold window side, pixels.
pub const BINARIZE_WINDOW: usize = 15;

/// A binary image where `true` marks ridge pixels.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl std::fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryImage {}x{}", self.width, self.height)?;
        for row in self.data.chunks(self.width) {
            let line: String = row.iter().map(|&b| if b { '#' } else { '.' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Clockwise 8-neighbourhood starting north: P2..P9 in Zhang–Suen notation.
pub(crate) const NEIGHBOURS: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryImage {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    /// Parses rows of `#` (on) and `.` (off).
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let data = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| c == '#'))
            .collect();
        BinaryImage {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    /// On/off state of the eight neighbours in [`NEIGHBOURS`] order.
    #[inline]
    pub fn ring(&self, x: usize, y: usize) -> [bool; 8] {
        let mut out = [false; 8];
        for (o, (dx, dy)) in out.iter_mut().zip(NEIGHBOURS) {
            *o = self.get(x as isize + dx, y as isize + dy);
        }
        out
    }

    /// True if any 2×2 window is fully on.
    pub fn has_solid_2x2(&self) -> bool {
        (0..self.height.saturating_sub(1)).any(|y| {
            (0..self.width.saturating_sub(1)).any(|x| self.solid_2x2_at(x, y))
        })
    }

    fn solid_2x2_at(&self, x: usize, y: usize) -> bool {
        let (x, y) = (x as isize, y as isize);
        self.get(x, y) && self.get(x + 1, y) && self.get(x, y + 1) && self.get(x + 1, y + 1)
    }
}

/// Number of off→on transitions around the ring.
#[inline]
pub(crate) fn transitions(ring: &[bool; 8]) -> usize {
    (0..8).filter(|&i| !ring[i] && ring[(i + 1) % 8]).count()
}

/// Adaptive-mean binarization: a pixel is ridge when darker than the mean
/// of its 15×15 window (clipped at the borders), with zero offset.
pub fn binarize(img: &GrayImage) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    // integral image with a zero row/column in front
    let mut integral = vec![0u64; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u64;
        for x in 0..w {
            row += img.get(x, y) as u64;
            integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
        }
    }
    let r = BINARIZE_WINDOW / 2;
    let mut out = BinaryImage::new(w, h);
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
            let total = integral[y1 * (w + 1) + x1] + integral[y0 * (w + 1) + x0]
                - integral[y0 * (w + 1) + x1]
                - integral[y1 * (w + 1) + x0];
            let n = ((y1 - y0) * (x1 - x0)) as u64;
            // p < total / n without rounding
            out.data[y * w + x] = (img.get(x, y) as u64) * n < total;
        }
    }
    out
}

fn zhang_suen_pass(img: &mut BinaryImage, first: bool, marked: &mut Vec<usize>) -> bool {
    marked.clear();
    for y in 0..img.height {
        for x in 0..img.width {
            if !img.data[y * img.width + x] {
                continue;
            }
            let p = img.ring(x, y);
            let b = p.iter().filter(|v| **v).count();
            if !(2..=6).contains(&b) || transitions(&p) != 1 {
                continue;
            }
            // p[0]=P2 (N), p[2]=P4 (E), p[4]=P6 (S), p[6]=P8 (W)
            let ok = if first {
                !(p[0] && p[2] && p[4]) && !(p[2] && p[4] && p[6])
            } else {
                !(p[0] && p[2] && p[6]) && !(p[0] && p[4] && p[6])
            };
            if ok {
                marked.push(y * img.width + x);
            }
        }
    }
    for &i in marked.iter() {
        img.data[i] = false;
    }
    !marked.is_empty()
}

/// Number of 8-connected groups among the on-neighbours of a pixel, treating
/// orthogonal neighbours as bridging their diagonal neighbours.
fn neighbour_components(ring: &[bool; 8]) -> usize {
    let mut seen = [false; 8];
    let mut groups = 0;
    for start in 0..8 {
        if !ring[start] || seen[start] {
            continue;
        }
        groups += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            // ring positions adjacent in the plane: ±1 always, ±2 via an
            // orthogonal neighbour when i is orthogonal (even index)
            let mut next = vec![(i + 1) % 8, (i + 7) % 8];
            if i % 2 == 0 {
                next.push((i + 2) % 8);
                next.push((i + 6) % 8);
            }
            for j in next {
                if ring[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    groups
}

/// Removes one pixel from each remaining 2×2 solid block where doing so
/// keeps local connectivity. Returns whether anything changed.
fn break_solid_blocks(img: &mut BinaryImage) -> bool {
    let mut changed = false;
    for y in 0..img.height.saturating_sub(1) {
        for x in 0..img.width.saturating_sub(1) {
            if !img.solid_2x2_at(x, y) {
                continue;
            }
            for (cx, cy) in [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)] {
                let ring = img.ring(cx, cy);
                let b = ring.iter().filter(|v| **v).count();
                if b >= 2 && neighbour_components(&ring) == 1 {
                    img.set(cx, cy, false);
                    changed = true;
                    break;
                }
            }
        }
    }
    changed
}

/// Zhang–Suen thinning to a one-pixel-wide skeleton.
///
/// After the classical two-subiteration scheme converges, any 2×2 solid
/// blocks left behind are broken and thinning is resumed, so the result is
/// a fixed point: thinning it again changes nothing.
pub fn thin(mut img: BinaryImage) -> BinaryImage {
    let mut marked = Vec::new();
    loop {
        while zhang_suen_pass(&mut img, true, &mut marked) | zhang_suen_pass(&mut img, false, &mut marked) {}
        if !break_solid_blocks(&mut img) {
            return img;
        }
    }
}

/// Adaptive binarization followed by thinning.
pub fn binarize_and_thin(img: &GrayImage) -> BinaryImage {
    thin(binarize(img))
}
