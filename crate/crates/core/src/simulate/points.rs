use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointPattern, Window};

use super::rng::stream_rng;

/// How the Strauss activity β is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StraussSize {
    Beta(f64),
    /// Calibrate β by pilot runs so the mean count is close to this target.
    TargetCount(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Process {
    Poisson {
        intensity: f64,
    },
    Thomas {
        parent_intensity: f64,
        mean_offspring: f64,
        sigma: f64,
    },
    Strauss {
        size: StraussSize,
        q: f64,
        r_int: f64,
        steps: usize,
    },
}

impl Process {
    pub fn name(&self) -> &'static str {
        match self {
            Process::Poisson { .. } => "poisson",
            Process::Thomas { .. } => "thomas",
            Process::Strauss { .. } => "strauss",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSpec {
    pub process: Process,
    pub window: Window,
    pub seed: u64,
}

/// Default Strauss burn-in in proposals.
pub const STRAUSS_STEPS: usize = 100_000;

pub fn simulate_pattern(spec: &SimulationSpec) -> Result<PointPattern> {
    match spec.process {
        Process::Poisson { .. } => sim_poisson(spec),
        Process::Thomas { .. } => sim_thomas(spec),
        Process::Strauss { .. } => sim_strauss(spec),
    }
}

fn uniform_point(rng: &mut ChaCha8Rng, w: &Window) -> Point {
    let (x0, x1) = w.x_range();
    let (y0, y1) = w.y_range();
    // half-open draws stay inside the window
    Point::new(x0 + rng.random::<f64>() * (x1 - x0), y0 + rng.random::<f64>() * (y1 - y0))
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> Result<usize> {
    if mean == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::domain(format!("invalid Poisson mean {mean}: {e}")))?;
    Ok(d.sample(rng) as usize)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Homogeneous Poisson process.
pub fn sim_poisson(spec: &SimulationSpec) -> Result<PointPattern> {
    let Process::Poisson { intensity } = spec.process else {
        return Err(Error::domain("spec does not describe a Poisson process"));
    };
    positive("intensity", intensity)?;
    let mut rng = stream_rng(spec.seed, 0);
    poisson_in(&mut rng, &spec.window, intensity)
}

pub(crate) fn poisson_in(rng: &mut ChaCha8Rng, w: &Window, intensity: f64) -> Result<PointPattern> {
    let n = poisson_count(rng, intensity * w.area())?;
    let pts = (0..n).map(|_| uniform_point(rng, w)).collect();
    PointPattern::new(*w, pts)
}

/// Thomas cluster process. Offspring wrap around on a torus and are
/// discarded when they leave a plane window; parents are not retained.
pub fn sim_thomas(spec: &SimulationSpec) -> Result<PointPattern> {
    let Process::Thomas {
        parent_intensity,
        mean_offspring,
        sigma,
    } = spec.process
    else {
        return Err(Error::domain("spec does not describe a Thomas process"));
    };
    positive("parent intensity", parent_intensity)?;
    positive("mean offspring", mean_offspring)?;
    positive("sigma", sigma)?;
    let w = &spec.window;
    let mut rng = stream_rng(spec.seed, 0);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::domain(e.to_string()))?;
    let parents = poisson_count(&mut rng, parent_intensity * w.area())?;
    let mut pts = Vec::new();
    for _ in 0..parents {
        let c = uniform_point(&mut rng, w);
        let k = poisson_count(&mut rng, mean_offspring)?;
        for _ in 0..k {
            let x = c.x + normal.sample(&mut rng);
            let y = c.y + normal.sample(&mut rng);
            if w.is_torus() {
                pts.push(w.wrap(x, y));
            } else {
                let p = Point::new(x, y);
                if w.contains(p) {
                    pts.push(p);
                }
            }
        }
    }
    PointPattern::new(*w, pts)
}

/// Cell lists for neighbour counting within the interaction radius.
struct Cells {
    window: Window,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
    pts: Vec<Point>,
    cell_of: Vec<usize>,
    r: f64,
}

impl Cells {
    fn new(window: Window, r: f64) -> Self {
        let nx = ((window.width() / r).floor() as usize).clamp(1, 512);
        let ny = ((window.height() / r).floor() as usize).clamp(1, 512);
        Self {
            window,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
            pts: Vec::new(),
            cell_of: Vec::new(),
            r,
        }
    }

    fn coords(&self, p: Point) -> (usize, usize) {
        let (x0, _) = self.window.x_range();
        let (y0, _) = self.window.y_range();
        let cx = (((p.x - x0) / self.window.width()) * self.nx as f64) as usize;
        let cy = (((p.y - y0) / self.window.height()) * self.ny as f64) as usize;
        (cx.min(self.nx - 1), cy.min(self.ny - 1))
    }

    fn len(&self) -> usize {
        self.pts.len()
    }

    fn insert(&mut self, p: Point) {
        let (cx, cy) = self.coords(p);
        let c = cy * self.nx + cx;
        self.cells[c].push(self.pts.len());
        self.pts.push(p);
        self.cell_of.push(c);
    }

    fn remove(&mut self, i: usize) {
        let c = self.cell_of[i];
        let pos = self.cells[c].iter().position(|&k| k == i).unwrap();
        self.cells[c].swap_remove(pos);
        let last = self.pts.len() - 1;
        if i != last {
            let lc = self.cell_of[last];
            let lp = self.cells[lc].iter().position(|&k| k == last).unwrap();
            self.cells[lc][lp] = i;
        }
        self.pts.swap_remove(i);
        self.cell_of.swap_remove(i);
    }

    /// Number of stored points other than `skip` closer than r to `u`.
    fn close(&self, u: Point, skip: Option<usize>) -> usize {
        let (cx, cy) = self.coords(u);
        let torus = self.window.is_torus();
        let span = |c: usize, n: usize| -> Vec<usize> {
            if n <= 3 {
                return (0..n).collect();
            }
            let mut v = Vec::with_capacity(3);
            for d in [-1i64, 0, 1] {
                let k = c as i64 + d;
                if torus {
                    v.push(k.rem_euclid(n as i64) as usize);
                } else if (0..n as i64).contains(&k) {
                    v.push(k as usize);
                }
            }
            v
        };
        let mut count = 0;
        for y in span(cy, self.ny) {
            for x in span(cx, self.nx) {
                for &k in &self.cells[y * self.nx + x] {
                    if Some(k) != skip && self.window.distance_unchecked(u, self.pts[k]) < self.r {
                        count += 1;
                    }
                }
            }
        }
        count
    }
}

/// Birth-death-shift Metropolis-Hastings chain for the Strauss density
/// β^n q^{s(x)}, started from the empty pattern. Returns the final state and
/// the mean count over the second half of the run.
fn strauss_chain(
    rng: &mut ChaCha8Rng,
    w: &Window,
    beta: f64,
    q: f64,
    r_int: f64,
    steps: usize,
) -> (Vec<Point>, f64) {
    let area = w.area();
    let mut cells = Cells::new(*w, r_int);
    let mut sum = 0.0;
    let mut counted = 0usize;
    for step in 0..steps {
        let u: f64 = rng.random();
        let n = cells.len();
        if u < 1.0 / 3.0 {
            let p = uniform_point(rng, w);
            let t = cells.close(p, None) as i32;
            let ratio = beta * area * q.powi(t) / (n as f64 + 1.0);
            if rng.random::<f64>() < ratio {
                cells.insert(p);
            }
        } else if u < 2.0 / 3.0 {
            if n > 0 {
                let i = rng.random_range(0..n);
                let t = cells.close(cells.pts[i], Some(i)) as i32;
                let ratio = n as f64 / (beta * area * q.powi(t));
                if rng.random::<f64>() < ratio {
                    cells.remove(i);
                }
            }
        } else if n > 0 {
            let i = rng.random_range(0..n);
            let p = uniform_point(rng, w);
            let old = cells.close(cells.pts[i], Some(i)) as i32;
            let new = cells.close(p, Some(i)) as i32;
            if rng.random::<f64>() < q.powi(new - old) {
                cells.remove(i);
                cells.insert(p);
            }
        }
        if step >= steps / 2 {
            sum += cells.len() as f64;
            counted += 1;
        }
    }
    let mean = if counted > 0 { sum / counted as f64 } else { 0.0 };
    (cells.pts, mean)
}

const PILOT_STEPS: usize = 40_000;
const PILOT_ROUNDS: usize = 8;

/// Pilot calibration of β on the log scale for a target mean count.
fn calibrate_beta(rng: &mut ChaCha8Rng, w: &Window, target: f64, q: f64, r_int: f64) -> f64 {
    let mut log_beta = (target / w.area()).ln();
    for _ in 0..PILOT_ROUNDS {
        let (_, mean) = strauss_chain(rng, w, log_beta.exp(), q, r_int, PILOT_STEPS);
        let step = (target / mean.max(1.0)).ln();
        log_beta += step.clamp(-1.0, 1.0);
    }
    log_beta.exp()
}

/// Strauss process via birth-death-shift Metropolis-Hastings.
pub fn sim_strauss(spec: &SimulationSpec) -> Result<PointPattern> {
    let Process::Strauss { size, q, r_int, steps } = spec.process else {
        return Err(Error::domain("spec does not describe a Strauss process"));
    };
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::domain(format!("Strauss interaction q must lie in (0, 1], got {q}")));
    }
    positive("interaction radius", r_int)?;
    if steps == 0 {
        return Err(Error::domain("Strauss sampler needs at least one step"));
    }
    let w = &spec.window;
    let mut rng = stream_rng(spec.seed, 0);
    let beta = match size {
        StraussSize::Beta(b) => {
            positive("beta", b)?;
            b
        }
        StraussSize::TargetCount(n) => {
            positive("target count", n)?;
            let mut pilot = stream_rng(spec.seed, 1);
            calibrate_beta(&mut pilot, w, n, q, r_int)
        }
    };
    let (pts, _) = strauss_chain(&mut rng, w, beta, q, r_int, steps);
    PointPattern::new(*w, pts)
}
