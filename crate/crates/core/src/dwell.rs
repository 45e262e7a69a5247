//! Dwell-time classes, impulse sequences, the clock and admissible impulse paths.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Constraint on the dwell time `t_{k+1} − t_k − 1` between impulses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DwellSpec {
    /// Arbitrary dwell time (any value in ℕ₀).
    Adt,
    /// Exact dwell time `T`.
    Edt(u32),
    /// Minimum dwell time `Tmin`.
    Mdt(u32),
    /// Range dwell time `[Tmin, Tmax]`.
    Rdt(u32, u32),
}

impl DwellSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DwellSpec::Adt => Ok(()),
            DwellSpec::Edt(t) if t >= 1 => Ok(()),
            DwellSpec::Mdt(t) if t >= 1 => Ok(()),
            DwellSpec::Rdt(a, b) if a >= 1 && a <= b => Ok(()),
            s => Err(Error::InvalidSpec(format!("{s}"))),
        }
    }

    /// `(Tmin, Tmax)` with `Tmax = None` when unbounded.
    pub fn bounds(&self) -> (u32, Option<u32>) {
        match *self {
            DwellSpec::Adt => (0, None),
            DwellSpec::Edt(t) => (t, Some(t)),
            DwellSpec::Mdt(t) => (t, None),
            DwellSpec::Rdt(a, b) => (a, Some(b)),
        }
    }

    /// Bounded range for RDT/EDT (EDT maps to `(T, T)`).
    pub fn range(&self) -> Result<(u32, u32)> {
        self.validate()?;
        match *self {
            DwellSpec::Edt(t) => Ok((t, t)),
            DwellSpec::Rdt(a, b) => Ok((a, b)),
            s => Err(Error::InvalidSpec(format!("{s} has no upper dwell bound"))),
        }
    }

    pub fn allows(&self, dwell: i64) -> bool {
        let (lo, hi) = self.bounds();
        dwell >= lo as i64 && hi.map_or(true, |h| dwell <= h as i64)
    }

    /// Replace an unbounded upper limit by `tmax`.
    pub fn with_surrogate(&self, tmax: u32) -> DwellSpec {
        match *self {
            DwellSpec::Adt => DwellSpec::Rdt(0, tmax),
            DwellSpec::Mdt(t) => DwellSpec::Rdt(t, tmax.max(t)),
            s => s,
        }
    }
}

impl fmt::Display for DwellSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DwellSpec::Adt => write!(f, "ADT"),
            DwellSpec::Edt(t) => write!(f, "EDT({t})"),
            DwellSpec::Mdt(t) => write!(f, "MDT({t})"),
            DwellSpec::Rdt(a, b) => write!(f, "RDT({a},{b})"),
        }
    }
}

/// Impulse instants `t₁ < t₂ < …` on `[0, horizon]`; `t₀ = −1` is implicit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImpulseSequence {
    instants: Vec<i64>,
    horizon: i64,
}

impl ImpulseSequence {
    pub fn new(instants: Vec<i64>, horizon: i64) -> Result<Self> {
        let mut prev = -1;
        for &t in &instants {
            if t <= prev {
                return Err(Error::Invalid("impulse instants must be strictly increasing and ≥ 0".into()));
            }
            prev = t;
        }
        if horizon < prev {
            return Err(Error::Invalid("horizon ends before the last instant".into()));
        }
        Ok(ImpulseSequence { instants, horizon })
    }

    pub fn instants(&self) -> &[i64] {
        &self.instants
    }

    pub fn horizon(&self) -> i64 {
        self.horizon
    }

    pub fn is_impulse(&self, t: i64) -> bool {
        self.instants.binary_search(&t).is_ok()
    }

    /// Impulse flags for `t = 0 … len−1`.
    pub fn flags(&self, len: usize) -> Vec<bool> {
        let mut f = vec![false; len];
        for &t in &self.instants {
            if (t as usize) < len {
                f[t as usize] = true;
            }
        }
        f
    }

    /// Dwell times `t_{k+1} − t_k − 1` of all completed intervals.
    pub fn dwells(&self) -> Vec<i64> {
        let mut prev = -1;
        self.instants
            .iter()
            .map(|&t| {
                let d = t - prev - 1;
                prev = t;
                d
            })
            .collect()
    }

    /// Every completed interval satisfies `spec`, and so does the open tail
    /// as far as it has run (it must not already exceed `Tmax`).
    pub fn satisfies(&self, spec: &DwellSpec) -> bool {
        if !self.dwells().iter().all(|&d| spec.allows(d)) {
            return false;
        }
        let last = self.instants.last().copied().unwrap_or(-1);
        let (_, hi) = spec.bounds();
        hi.map_or(true, |h| self.horizon - last - 1 <= h as i64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.instants).expect("serializable")
    }

    /// Parse an integer array; the horizon defaults to the last instant.
    pub fn from_json(s: &str, horizon: Option<i64>) -> Result<Self> {
        let v: Vec<i64> = serde_json::from_str(s)?;
        let h = horizon.unwrap_or_else(|| v.last().copied().unwrap_or(0));
        Self::new(v, h)
    }
}

/// Clock `θ(t) = t − t_k − 1` on `[t_k + 1, t_{k+1}]`.
pub fn clock_value(seq: &ImpulseSequence, t: i64) -> Result<u64> {
    if t < 0 || t > seq.horizon {
        return Err(Error::OutsideHorizon(t));
    }
    let idx = seq.instants.partition_point(|&s| s < t);
    let last = if idx == 0 { -1 } else { seq.instants[idx - 1] };
    Ok((t - last - 1) as u64)
}

/// Clock saturated at `cap`, as used for minimum dwell-time specifications.
pub fn clock_value_saturated(seq: &ImpulseSequence, t: i64, cap: u64) -> Result<u64> {
    clock_value(seq, t).map(|v| v.min(cap))
}

/// 0/1 impulse pattern over a window of length `L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path(pub Vec<u8>);

impl Path {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    /// Unit path `e_j` (1-based position).
    pub fn unit(len: usize, j: usize) -> Path {
        let mut v = vec![0; len];
        v[j - 1] = 1;
        Path(v)
    }

    pub fn from_positions(len: usize, js: &[usize]) -> Path {
        let mut v = vec![0; len];
        for &j in js {
            v[j - 1] = 1;
        }
        Path(v)
    }

    pub fn concat(&self, other: &Path) -> Path {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Path(v)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Membership in 𝒫_L checked directly from the three defining conditions.
pub fn is_admissible(p: &Path, tmin: u32, tmax: u32) -> bool {
    let l = p.len() as i64;
    let js: Vec<i64> = (0..p.len()).filter(|&i| p.bit(i)).map(|i| i as i64 + 1).collect();
    let (Some(&first), Some(&last)) = (js.first(), js.last()) else {
        return false;
    };
    if first - 1 > tmax as i64 || l - last > tmax as i64 {
        return false;
    }
    js.windows(2).all(|w| {
        let g = w[1] - w[0] - 1;
        g >= tmin as i64 && g <= tmax as i64
    })
}

/// All admissible paths of length `L`, sorted.
pub fn enumerate_paths(tmin: u32, tmax: u32, l: usize) -> Vec<Path> {
    fn rec(pos: usize, bits: &mut Vec<u8>, tmin: usize, tmax: usize, out: &mut Vec<Path>) {
        let l = bits.len();
        if l - pos <= tmax {
            out.push(Path(bits.clone()));
        }
        for gap in tmin..=tmax {
            let next = pos + gap + 1;
            if next > l {
                break;
            }
            bits[next - 1] = 1;
            rec(next, bits, tmin, tmax, out);
            bits[next - 1] = 0;
        }
    }
    let mut out = Vec::new();
    if tmin > tmax || l == 0 {
        return out;
    }
    let mut bits = vec![0u8; l];
    for j in 1..=l.min(tmax as usize + 1) {
        bits[j - 1] = 1;
        rec(j, &mut bits, tmin as usize, tmax as usize, &mut out);
        bits[j - 1] = 0;
    }
    out.sort();
    out
}

/// Admissible continuations `𝒫_L⁺(p) = {q ∈ 𝒫_L : [p; q] ∈ 𝒫_{2L}}`.
pub fn postadmissible(p: &Path, tmin: u32, tmax: u32) -> Result<Vec<Path>> {
    if !is_admissible(p, tmin, tmax) {
        return Err(Error::PathNotAdmissible);
    }
    Ok(enumerate_paths(tmin, tmax, p.len())
        .into_iter()
        .filter(|q| is_admissible(&p.concat(q), tmin, tmax))
        .collect())
}

/// Restriction of a sequence to the window `[L·k, L·(k+1))` as a path.
pub fn window_path(seq: &ImpulseSequence, l: usize, k: usize) -> Path {
    let start = (l * k) as i64;
    Path((0..l as i64).map(|i| seq.is_impulse(start + i) as u8).collect())
}

/// Dwell selection rule for [`sample_sequence`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    Minimal,
    Maximal,
    UniformRandom { seed: u64 },
}

/// Generate instants on `[0, horizon]` satisfying `spec`.
pub fn sample_sequence(spec: &DwellSpec, horizon: i64, policy: Policy) -> Result<ImpulseSequence> {
    spec.validate()?;
    if horizon < 1 {
        return Err(Error::Invalid("horizon must be at least 1".into()));
    }
    let (lo, hi) = spec.bounds();
    let mut rng = match policy {
        Policy::UniformRandom { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    if hi.is_none() && policy != Policy::Minimal {
        return Err(Error::UnboundedSpec(format!(
            "{spec} needs a surrogate upper bound for this policy"
        )));
    }
    let mut out = Vec::new();
    let mut t = -1i64;
    loop {
        let dwell = match policy {
            Policy::Minimal => lo,
            Policy::Maximal => hi.unwrap_or(lo),
            Policy::UniformRandom { .. } => rng.as_mut().unwrap().gen_range(lo..=hi.unwrap()),
        } as i64;
        t += dwell + 1;
        if t > horizon {
            break;
        }
        out.push(t);
    }
    ImpulseSequence::new(out, horizon)
}
