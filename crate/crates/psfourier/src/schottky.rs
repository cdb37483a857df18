//! Schottky groups: loxodromic generators with ping-pong balls in the chart,
//! reduced-word enumeration and orbit traversal.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::dd::DdMat;
use crate::error::{check_len, Error, Result};
use crate::hyperbolic::{bilinear, chart_coords, BoundaryPoint, GroupElement, HyperbolicPoint, ModelParams};
use crate::par;

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Validation(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dist(&self.center, x) < self.radius
    }

    /// Signed distance from `x` to the boundary, positive inside.
    pub fn depth(&self, x: &[f64]) -> f64 {
        self.radius - dist(&self.center, x)
    }

    fn disjoint(&self, other: &Ball) -> bool {
        dist(&self.center, &other.center) > self.radius + other.radius
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Image of a chart ball under `g`. Fails when `g` sends a point of the
/// closed ball to infinity, since the image is then not a bounded ball.
pub fn image_ball(g: &GroupElement, ball: &Ball, tol: f64) -> Result<Ball> {
    let d = ball.center.len();
    let pole = g.inverse().apply(BoundaryPoint::infinity(d).coords());
    if let Ok(p) = chart_coords(&pole, tol) {
        if ball.depth(&p) >= -tol * ball.radius {
            return Err(Error::Degenerate("ball contains the pole of the map".into()));
        }
    }
    image_sphere(g, ball, tol)
}

/// Image of the boundary sphere of `ball` under `g`, as center and radius.
/// Only requires the pole of `g` to be off the sphere.
pub fn image_sphere(g: &GroupElement, ball: &Ball, tol: f64) -> Result<Ball> {
    let d = ball.center.len();
    let pole = g.inverse().apply(BoundaryPoint::infinity(d).coords());
    if let Ok(p) = chart_coords(&pole, tol) {
        if ball.depth(&p).abs() <= tol * ball.radius {
            return Err(Error::Degenerate("sphere passes through the pole of the map".into()));
        }
    }
    let mut pts = Vec::with_capacity(d + 1);
    for j in 0..d {
        let mut x = ball.center.clone();
        x[j] += ball.radius;
        pts.push(g.act_chart(&x, tol)?);
    }
    let mut x = ball.center.clone();
    x[0] -= ball.radius;
    pts.push(g.act_chart(&x, tol)?);
    circumsphere(&pts)
}

fn circumsphere(pts: &[Vec<f64>]) -> Result<Ball> {
    let d = pts[0].len();
    let p0 = &pts[0];
    let n0: f64 = p0.iter().map(|x| x * x).sum();
    let a = DMatrix::from_fn(d, d, |i, j| 2.0 * (pts[i + 1][j] - p0[j]));
    let b = DVector::from_fn(d, |i, _| pts[i + 1].iter().map(|x| x * x).sum::<f64>() - n0);
    let c = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Degenerate("image sphere is degenerate".into()))?;
    let center: Vec<f64> = c.iter().copied().collect();
    let radius = dist(&center, p0);
    Ok(Ball { center, radius })
}

#[derive(Clone, Debug)]
pub struct SchottkyGenerator {
    pub elem: GroupElement,
    pub ball_plus: Ball,
    pub ball_minus: Ball,
}

impl SchottkyGenerator {
    pub fn new(elem: GroupElement, ball_plus: Ball, ball_minus: Ball, tol: f64) -> Result<Self> {
        let d = elem.dim();
        check_len(d, ball_plus.center.len())?;
        check_len(d, ball_minus.center.len())?;
        let rho = elem.spectral_radius();
        if !(rho > 1.0 + tol) {
            return Err(Error::Validation(format!(
                "generator is not loxodromic (spectral radius {rho})"
            )));
        }
        if !ball_plus.disjoint(&ball_minus) {
            return Err(Error::Configuration(
                "attracting and repelling balls of a generator overlap".into(),
            ));
        }
        Ok(SchottkyGenerator {
            elem,
            ball_plus,
            ball_minus,
        })
    }
}

/// One letter: generator index and orientation, encoded as `2 * gen + inv`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u8);

impl Letter {
    pub fn new(gen: usize, inverse: bool) -> Self {
        Letter((2 * gen + inverse as usize) as u8)
    }

    pub fn from_code(code: u8) -> Self {
        Letter(code)
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn gen(self) -> usize {
        (self.0 / 2) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = if self.is_inverse() { b'A' } else { b'a' };
        if self.gen() < 26 {
            write!(f, "{}", (base + self.gen() as u8) as char)
        } else if self.is_inverse() {
            write!(f, "g{}'", self.gen())
        } else {
            write!(f, "g{}", self.gen())
        }
    }
}

/// Reduced word in the generators; lowercase letters are generators and
/// uppercase their inverses when displayed.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        for w in letters.windows(2) {
            if w[1] == w[0].inverse() {
                return Err(Error::Validation(format!("word is not reduced at {}{}", w[0], w[1])));
            }
        }
        Ok(Word { letters })
    }

    pub fn empty() -> Self {
        Word::default()
    }

    pub(crate) fn from_codes(codes: &[u8]) -> Self {
        Word {
            letters: codes.iter().map(|&c| Letter(c)).collect(),
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    /// Free reduction of the concatenation.
    pub fn concat(&self, other: &Word) -> Word {
        let mut out = self.letters.clone();
        for &l in &other.letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word { letters: out }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Number of reduced words of length at most `n` on `k` generators.
pub fn word_count(k: usize, n: usize) -> u64 {
    let mut total = 1u64;
    let mut level = 2 * k as u64;
    for _ in 1..=n {
        total += level;
        level *= (2 * k - 1) as u64;
    }
    total
}

/// Reduced words ordered by length, then lexicographically by letter code.
pub struct WordIter {
    alphabet: u8,
    max_len: usize,
    cur: Vec<u8>,
    done: bool,
    started: bool,
}

impl WordIter {
    pub fn new(k: usize, max_len: usize) -> Self {
        WordIter {
            alphabet: (2 * k) as u8,
            max_len,
            cur: Vec::new(),
            done: false,
            started: false,
        }
    }

    fn smallest_after(prev: Option<u8>) -> u8 {
        match prev {
            Some(p) if p ^ 1 == 0 => 1,
            _ => 0,
        }
    }

    fn advance(&mut self) -> bool {
        let n = self.cur.len();
        let mut i = n;
        while i > 0 {
            i -= 1;
            let prev = if i > 0 { Some(self.cur[i - 1]) } else { None };
            let mut c = self.cur[i] + 1;
            if prev.map(|p| p ^ 1) == Some(c) {
                c += 1;
            }
            if c < self.alphabet {
                self.cur[i] = c;
                for j in i + 1..n {
                    self.cur[j] = Self::smallest_after(Some(self.cur[j - 1]));
                }
                return true;
            }
        }
        // exhausted this length
        if n >= self.max_len || self.alphabet == 0 {
            return false;
        }
        self.cur.clear();
        for j in 0..=n {
            let prev = if j > 0 { Some(self.cur[j - 1]) } else { None };
            self.cur.push(Self::smallest_after(prev));
        }
        true
    }
}

impl Iterator for WordIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(Word::empty());
        }
        if self.advance() {
            Some(Word::from_codes(&self.cur))
        } else {
            self.done = true;
            None
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorCheck {
    /// Worst margin `r_plus - |gamma(p) - c_plus|` over the exact image sphere
    /// and the sample.
    pub margin: f64,
    pub exact_margin: f64,
    pub sampled_margin: f64,
    /// A chart point outside `ball_minus` whose image escapes `ball_plus`.
    pub witness: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct PingPongReport {
    pub passed: bool,
    pub worst_margin: f64,
    pub generators: Vec<GeneratorCheck>,
}

#[derive(Clone, Debug)]
pub struct SchottkyGroup {
    params: ModelParams,
    gens: Vec<SchottkyGenerator>,
    letter_elems: Vec<GroupElement>,
    attracting: Vec<Vec<f64>>,
    validated: bool,
}

impl SchottkyGroup {
    /// Checks dimensions and pairwise disjointness of all `2k` balls. The
    /// ping-pong inclusions are checked separately by [`Self::validated`].
    pub fn new(params: ModelParams, gens: Vec<SchottkyGenerator>) -> Result<Self> {
        if gens.is_empty() {
            return Err(Error::Validation(
                "a Schottky group needs at least one generator".into(),
            ));
        }
        for g in &gens {
            check_len(params.size(), g.elem.size())?;
        }
        let balls: Vec<(String, &Ball)> = gens
            .iter()
            .enumerate()
            .flat_map(|(i, g)| {
                [
                    (format!("ball_plus({i})"), &g.ball_plus),
                    (format!("ball_minus({i})"), &g.ball_minus),
                ]
            })
            .collect();
        for i in 0..balls.len() {
            for j in i + 1..balls.len() {
                if !balls[i].1.disjoint(balls[j].1) {
                    return Err(Error::Configuration(format!(
                        "{} and {} overlap",
                        balls[i].0, balls[j].0
                    )));
                }
            }
        }
        let mut letter_elems = Vec::with_capacity(2 * gens.len());
        for g in &gens {
            letter_elems.push(g.elem.clone());
            letter_elems.push(g.elem.inverse());
        }
        let mut attracting = Vec::with_capacity(letter_elems.len());
        for (c, e) in letter_elems.iter().enumerate() {
            let ball = if c % 2 == 0 {
                &gens[c / 2].ball_plus
            } else {
                &gens[c / 2].ball_minus
            };
            attracting.push(attracting_fixed_point(e, &ball.center, params.tol)?);
        }
        Ok(SchottkyGroup {
            params,
            gens,
            letter_elems,
            attracting,
            validated: false,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn gens(&self) -> &[SchottkyGenerator] {
        &self.gens
    }

    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    pub fn is_validated(&self) -> bool {
        self.validated
    }

    pub fn letter_element(&self, l: Letter) -> &GroupElement {
        &self.letter_elems[l.code() as usize]
    }

    /// Ball containing the limit points of words starting with `l`.
    pub fn letter_ball(&self, l: Letter) -> &Ball {
        let g = &self.gens[l.gen()];
        if l.is_inverse() {
            &g.ball_minus
        } else {
            &g.ball_plus
        }
    }

    /// Chart coordinate of the attracting fixed point of `l`.
    pub fn letter_attracting(&self, l: Letter) -> &[f64] {
        &self.attracting[l.code() as usize]
    }

    pub fn verify_ping_pong(&self) -> PingPongReport {
        let checks: Vec<GeneratorCheck> = self.gens.iter().map(|g| self.check_generator(g)).collect();
        let worst = checks.iter().fold(f64::INFINITY, |m, c| m.min(c.margin));
        PingPongReport {
            passed: worst > 0.0,
            worst_margin: worst,
            generators: checks,
        }
    }

    /// Runs [`Self::verify_ping_pong`] and marks the group validated on success.
    pub fn validated(mut self) -> Result<Self> {
        let report = self.verify_ping_pong();
        if !report.passed {
            let (i, c) = report
                .generators
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.margin.total_cmp(&b.1.margin))
                .expect("at least one generator");
            let w = c
                .witness
                .as_ref()
                .map(|w| format!(" at witness {w:?}"))
                .unwrap_or_default();
            return Err(Error::Configuration(format!(
                "ping-pong inclusion fails for generator {i} (margin {:.3e}){w}",
                c.margin
            )));
        }
        self.validated = true;
        Ok(self)
    }

    fn check_generator(&self, g: &SchottkyGenerator) -> GeneratorCheck {
        let tol = self.params.tol;
        let d = self.params.d;
        let plus = &g.ball_plus;
        let minus = &g.ball_minus;
        let fail = |w: Vec<f64>| GeneratorCheck {
            margin: f64::NEG_INFINITY,
            exact_margin: f64::NEG_INFINITY,
            sampled_margin: f64::NEG_INFINITY,
            witness: Some(w),
        };
        // gamma^-1(inf) must lie inside ball_minus so that infinity, which is
        // outside ball_minus, has a finite image.
        let pre_inf = g.elem.inverse().apply(BoundaryPoint::infinity(d).coords());
        match chart_coords(&pre_inf, tol) {
            Ok(p) if minus.contains(&p) => {}
            _ => {
                let mut far = minus.center.clone();
                far[0] += 1e6 * (1.0 + minus.radius);
                return fail(far);
            }
        }
        let exact_margin = match image_sphere(&g.elem, minus, tol) {
            Ok(img) => plus.radius - (dist(&img.center, &plus.center) + img.radius),
            Err(_) => f64::NEG_INFINITY,
        };
        let mut sampled_margin = f64::INFINITY;
        let mut witness = None;
        let mut consider = |x: Vec<f64>| {
            if let Ok(y) = g.elem.act_chart(&x, tol) {
                let m = plus.depth(&y);
                if m < sampled_margin {
                    sampled_margin = m;
                    witness = Some(x);
                }
            }
        };
        for u in sphere_samples(d) {
            let x: Vec<f64> = minus
                .center
                .iter()
                .zip(&u)
                .map(|(c, ui)| c + minus.radius * ui)
                .collect();
            consider(x);
        }
        let img_inf = g.elem.apply(BoundaryPoint::infinity(d).coords());
        if let Ok(y) = chart_coords(&img_inf, tol) {
            let m = plus.depth(&y);
            if m < sampled_margin {
                sampled_margin = m;
                let mut far = minus.center.clone();
                far[0] += 1e6 * (1.0 + minus.radius);
                witness = Some(far);
            }
        }
        let margin = exact_margin.min(sampled_margin);
        GeneratorCheck {
            margin,
            exact_margin,
            sampled_margin,
            witness: if margin > 0.0 { None } else { witness },
        }
    }

    /// Heuristic stand-in for Zariski density: at least two generators with
    /// distinct axes that do not commute.
    pub fn zariski_heuristic(&self) -> bool {
        let tol = self.params.tol;
        for i in 0..self.gens.len() {
            for j in i + 1..self.gens.len() {
                let a = &self.gens[i].elem;
                let b = &self.gens[j].elem;
                let comm = a.compose(b).max_abs_diff(&b.compose(a));
                let ai = &self.attracting[2 * i];
                let ri = &self.attracting[2 * i + 1];
                let aj = &self.attracting[2 * j];
                let rj = &self.attracting[2 * j + 1];
                let same_axis =
                    (dist(ai, aj) < tol && dist(ri, rj) < tol) || (dist(ai, rj) < tol && dist(ri, aj) < tol);
                if comm > tol && !same_axis {
                    return true;
                }
            }
        }
        false
    }

    pub fn enumerate_words(&self, n: usize) -> WordIter {
        WordIter::new(self.rank(), n)
    }

    pub fn word_to_element(&self, w: &Word) -> GroupElement {
        let mut g = GroupElement::identity(self.params.size());
        for &l in w.letters() {
            g = g.compose_corrected(self.letter_element(l), self.params.tol);
        }
        g
    }

    /// Visits every reduced word of length `<= max_len` with its group element
    /// and returns `f`'s values grouped by length, each group in
    /// lexicographic word order. Subtrees are processed in parallel.
    pub fn orbit_map<T, F>(&self, max_len: usize, f: F) -> Vec<Vec<T>>
    where
        T: Send,
        F: Fn(&[u8], &GroupElement) -> Option<T> + Sync + Send,
    {
        let tol = self.params.tol;
        let split = max_len.min(2);
        let mut out: Vec<Vec<T>> = (0..=max_len).map(|_| Vec::new()).collect();
        let prefixes: Vec<Word> = WordIter::new(self.rank(), split).collect();
        for w in prefixes.iter().filter(|w| w.len() < split) {
            let codes: Vec<u8> = w.letters().iter().map(|l| l.code()).collect();
            if let Some(v) = f(&codes, &self.word_to_element(w)) {
                out[w.len()].push(v);
            }
        }
        let roots: Vec<&Word> = prefixes.iter().filter(|w| w.len() == split).collect();
        let parts = par::map_slice(&roots, |w| {
            let mut acc: Vec<Vec<T>> = (0..=max_len).map(|_| Vec::new()).collect();
            let mut codes: Vec<u8> = w.letters().iter().map(|l| l.code()).collect();
            let g = self.word_to_element(w);
            self.dfs(&mut codes, &g, max_len, tol, &f, &mut acc);
            acc
        });
        for part in parts {
            for (lvl, vals) in part.into_iter().enumerate() {
                out[lvl].extend(vals);
            }
        }
        out
    }

    fn dfs<T, F>(&self, codes: &mut Vec<u8>, g: &GroupElement, max_len: usize, tol: f64, f: &F, acc: &mut [Vec<T>])
    where
        F: Fn(&[u8], &GroupElement) -> Option<T>,
    {
        if let Some(v) = f(codes, g) {
            acc[codes.len()].push(v);
        }
        if codes.len() == max_len {
            return;
        }
        let last = codes.last().copied();
        for c in 0..self.letter_elems.len() as u8 {
            if last.map(|p| p ^ 1) == Some(c) {
                continue;
            }
            let child = g.compose_corrected(&self.letter_elems[c as usize], tol);
            codes.push(c);
            self.dfs(codes, &child, max_len, tol, f, acc);
            codes.pop();
        }
    }

    /// Largest `|g^T J g - J|` over all words of length `<= n`.
    pub fn max_invariant_residual(&self, n: usize) -> f64 {
        self.orbit_map(n, |_, g| Some(g.invariant_residual()))
            .iter()
            .flatten()
            .fold(0.0, |m: f64, &r| m.max(r))
    }

    /// Smallest hyperbolic distance between orbit points `gamma o` of distinct
    /// reduced words of length `<= n`, capped at 1. Pairs are pruned with the
    /// triangle inequality and an f64 estimate of `B`, and survivors measured
    /// exactly through `d(o, a^-1 b o)`.
    pub fn discreteness_witness(&self, n: usize, basepoint: &HyperbolicPoint) -> f64 {
        let mut recs: Vec<(f64, Vec<f64>, GroupElement)> = self
            .orbit_map(n, |_, g| {
                Some((
                    g.displacement(basepoint),
                    g.act_point(basepoint).coords().to_vec(),
                    g.clone(),
                ))
            })
            .into_iter()
            .flatten()
            .collect();
        recs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let cap = 1.0f64;
        let bcap = cap.cosh();
        let mut best = cap;
        for i in 0..recs.len() {
            for j in i + 1..recs.len() {
                if recs[j].0 - recs[i].0 >= best {
                    break;
                }
                let (x, y) = (&recs[i].1, &recs[j].1);
                let scale: f64 = x.iter().map(|v| v.abs()).sum::<f64>() * y.iter().map(|v| v.abs()).sum::<f64>();
                if bilinear(x, y) > bcap + 1e-12 * scale {
                    continue;
                }
                let h = recs[i].2.inverse().compose(&recs[j].2);
                best = best.min(h.displacement(basepoint));
            }
        }
        best
    }

    /// For each reduced word of length `depth`, the image under the word of the
    /// attracting fixed point of its last letter. These are limit points.
    pub fn limit_set_sample(&self, depth: usize) -> Result<LimitSample> {
        if !self.validated {
            return Err(Error::NotValidated);
        }
        if depth < 1 {
            return Err(Error::Validation("depth must be at least 1".into()));
        }
        let tol = self.params.tol;
        let found = self.orbit_map(depth, |codes, g| {
            if codes.len() != depth {
                return None;
            }
            let last = Letter(*codes.last().expect("nonempty"));
            let x = self.letter_attracting(last);
            Some((Word::from_codes(codes), g.act_chart(x, tol).ok()))
        });
        let mut sample = LimitSample::default();
        for (w, p) in found.into_iter().flatten() {
            match p {
                Some(p) => {
                    sample.points.push(p);
                    sample.words.push(w);
                }
                None => sample.excluded += 1,
            }
        }
        Ok(sample)
    }

    /// Nested ping-pong ball of a nonempty word: the image of the ball of its
    /// last letter under the preceding letters.
    pub fn word_ball(&self, w: &Word) -> Result<Ball> {
        let (last, prefix) = w
            .letters()
            .split_last()
            .ok_or_else(|| Error::Validation("empty word has no ball".into()))?;
        let g = self.word_to_element(&Word {
            letters: prefix.to_vec(),
        });
        image_ball(&g, self.letter_ball(*last), self.params.tol)
    }
}

#[derive(Clone, Debug, Default)]
pub struct LimitSample {
    pub points: Vec<Vec<f64>>,
    pub words: Vec<Word>,
    pub excluded: usize,
}

fn attracting_fixed_point(g: &GroupElement, start: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut x = start.to_vec();
    for _ in 0..10_000 {
        let y = g.act_chart(&x, tol)?;
        let step = dist(&x, &y);
        x = y;
        if step <= 1e-15 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            return Ok(x);
        }
    }
    Err(Error::Degenerate("fixed-point iteration did not converge".into()))
}

/// Sample of unit vectors in `R^d` used for the ping-pong check.
fn sphere_samples(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..512)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / 512.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            // Gaussian directions from a fixed-seed generator.
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
            let mut out = Vec::new();
            for j in 0..d {
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                out.push(e.clone());
                e[j] = -1.0;
                out.push(e);
            }
            for _ in 0..256 * d {
                let v: Vec<f64> = (0..d).map(|_| crate::hyperbolic::gaussian(&mut rng)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                out.push(v.iter().map(|x| x / n).collect());
            }
            out
        }
    }
}

/// Conjugate of `g_l * m` by a frame taking `([e_0], [e_{d+1}])` to
/// `(att, rep)`.
pub fn build_loxodromic(
    params: &ModelParams,
    att: &BoundaryPoint,
    rep: &BoundaryPoint,
    length: f64,
    m: &DMatrix<f64>,
) -> Result<GroupElement> {
    let n = params.size();
    check_len(n, att.coords().len())?;
    check_len(n, rep.coords().len())?;
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Validation(format!(
            "translation length must be positive, got {length}"
        )));
    }
    if att.approx_eq(rep, params.tol) {
        return Err(Error::Degenerate("attracting and repelling points coincide".into()));
    }
    let p0 = att.normalized();
    let q0 = rep.normalized();
    // future representatives
    let p0: Vec<f64> = if p0[0] + p0[n - 1] < 0.0 {
        p0.iter().map(|x| -x).collect()
    } else {
        p0
    };
    let q: Vec<f64> = if q0[0] + q0[n - 1] < 0.0 {
        q0.iter().map(|x| -x).collect()
    } else {
        q0
    };
    let bpq = bilinear(&p0, &q);
    if !(bpq > params.tol) {
        return Err(Error::Degenerate("attracting and repelling points coincide".into()));
    }
    let p: Vec<f64> = p0.iter().map(|x| x / bpq).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let candidates = (1..n - 1).chain([0, n - 1]);
    for c in candidates {
        if basis.len() == params.d {
            break;
        }
        let mut v = vec![0.0; n];
        v[c] = 1.0;
        let (bq, bp) = (bilinear(&v, &q), bilinear(&v, &p));
        for i in 0..n {
            v[i] -= bq * p[i] + bp * q[i];
        }
        for u in &basis {
            let c = -bilinear(&v, u);
            for i in 0..n {
                v[i] -= c * u[i];
            }
        }
        let nn = -bilinear(&v, &v);
        if nn > 1e-6 {
            let s = nn.sqrt();
            basis.push(v.iter().map(|x| x / s).collect());
        }
    }
    if basis.len() != params.d {
        return Err(Error::Degenerate("could not complete the frame".into()));
    }
    let mut cols = Vec::with_capacity(n);
    cols.push(p);
    cols.extend(basis);
    cols.push(q);
    let mut hm = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
    if hm.determinant() < 0.0 {
        for i in 0..n {
            hm[(i, 1)] = -hm[(i, 1)];
        }
    }
    let h = GroupElement::from_dd(DdMat::from_fn(n, |i, j| hm[(i, j)].into())).reproject();
    let core = params.geodesic_flow(length).compose(&params.rotation_embed(m)?);
    Ok(h.compose(&core).compose(&h.inverse()).reproject())
}

/// Chart coordinate of the visual direction `u = (u_f, u_1..u_d)` seen from
/// the basepoint, where `u_f` points toward `[e_0]`.
pub fn visual_to_chart(u: &[f64]) -> Vec<f64> {
    let s = std::f64::consts::SQRT_2 / (1.0 - u[0]);
    u[1..].iter().map(|x| s * x).collect()
}

/// Chart ball that is the image of the visual cap of half-angle `theta` about
/// the unit direction `u`. The cap must not contain the `[e_0]` direction.
pub fn cap_ball(u: &[f64], theta: f64) -> Result<Ball> {
    let dim = u.len();
    let angle_to_pole = u[0].clamp(-1.0, 1.0).acos();
    if angle_to_pole <= theta {
        return Err(Error::Degenerate("cap contains the point at infinity".into()));
    }
    let mut t: Vec<f64> = (0..dim).map(|i| if i == 0 { 1.0 } else { 0.0 } - u[0] * u[i]).collect();
    let tn = t.iter().map(|x| x * x).sum::<f64>().sqrt();
    if tn < 1e-12 {
        t = vec![0.0; dim];
        t[1] = 1.0;
    } else {
        t.iter_mut().for_each(|x| *x /= tn);
    }
    let (s, c) = theta.sin_cos();
    let a: Vec<f64> = (0..dim).map(|i| c * u[i] + s * t[i]).collect();
    let b: Vec<f64> = (0..dim).map(|i| c * u[i] - s * t[i]).collect();
    let xa = visual_to_chart(&a);
    let xb = visual_to_chart(&b);
    let center: Vec<f64> = xa.iter().zip(&xb).map(|(p, q)| 0.5 * (p + q)).collect();
    Ball::new(center, 0.5 * dist(&xa, &xb))
}

/// Symmetric Schottky group: `k <= d + 1` generators of translation length
/// `length` whose axes pass through the basepoint along mutually orthogonal
/// visual directions, tilted so that no endpoint is the point at infinity.
/// Ping-pong caps sit halfway between the isometric caps and tangency.
pub fn symmetric_group(d: usize, k: usize, length: f64) -> Result<SchottkyGroup> {
    let params = ModelParams::with_dim(d)?;
    if k == 0 || k > d + 1 {
        return Err(Error::Validation(format!("need 1 <= k <= d + 1 = {}, got {k}", d + 1)));
    }
    if !(length > 0.0) {
        return Err(Error::Validation("translation length must be positive".into()));
    }
    let iso = 2.0 * (-0.5 * length).exp().atan();
    // half the angle between neighbouring axis endpoints, which is also the
    // angle from the endpoints to the pole when d = 1
    let quarter = std::f64::consts::FRAC_PI_4;
    if iso >= quarter {
        return Err(Error::Configuration(format!(
            "translation length {length} is too short for {k} orthogonal axes"
        )));
    }
    let theta = 0.5 * (iso + quarter);
    let axes = tilted_axes(d);
    let mut gens = Vec::with_capacity(k);
    for a in axes.into_iter().take(k) {
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        let att = params.chart_to_boundary(&visual_to_chart(&a))?;
        let rep = params.chart_to_boundary(&visual_to_chart(&neg))?;
        let elem = build_loxodromic(&params, &att, &rep, length, &DMatrix::identity(d, d))?;
        gens.push(SchottkyGenerator::new(
            elem,
            cap_ball(&a, theta)?,
            cap_ball(&neg, theta)?,
            params.tol,
        )?);
    }
    SchottkyGroup::new(params, gens)
}

/// Images of the standard basis of `R^{d+1}` under the Householder reflection
/// exchanging `e_0` and `(1, .., 1) / sqrt(d + 1)`.
fn tilted_axes(d: usize) -> Vec<Vec<f64>> {
    let n = d + 1;
    let s = 1.0 / (n as f64).sqrt();
    let v: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 - s } else { -s }).collect();
    let vv: f64 = v.iter().map(|x| x * x).sum();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let e = if i == j { 1.0 } else { 0.0 };
                    e - 2.0 * v[i] * v[j] / vv
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letters_and_words() {
        let a = Letter::new(0, false);
        assert_eq!(a.inverse(), Letter::new(0, true));
        assert!(Word::new(vec![a, a.inverse()]).is_err());
        let w = Word::new(vec![a, Letter::new(1, true)]).unwrap();
        assert_eq!(w.to_string(), "aB");
        assert_eq!(w.concat(&w.inverse()), Word::empty());
    }

    #[test]
    fn word_iteration_order() {
        let words: Vec<String> = WordIter::new(2, 2).map(|w| w.to_string()).collect();
        assert_eq!(words.len(), 17);
        assert_eq!(&words[..6], &["e", "a", "A", "b", "B", "aa"]);
        assert_eq!(words[6], "ab");
        assert_eq!(words[16], "BB");
        let k1: Vec<String> = WordIter::new(1, 3).map(|w| w.to_string()).collect();
        assert_eq!(k1, ["e", "a", "A", "aa", "AA", "aaa", "AAA"]);
    }

    #[test]
    fn symmetric_reference_axes() {
        let g = symmetric_group(1, 2, 2.0).unwrap();
        let a = g.letter_attracting(Letter::new(0, false))[0];
        let r = g.letter_attracting(Letter::new(0, true))[0];
        assert!((a - 3.414213562373095).abs() < 1e-9, "{a}");
        assert!((r + 0.585786437626905).abs() < 1e-9, "{r}");
    }

    #[test]
    fn circumsphere_of_unit_circle() {
        let b = circumsphere(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert!(b.center.iter().all(|c| c.abs() < 1e-15));
        assert!((b.radius - 1.0).abs() < 1e-15);
    }
}
