//! Binary slice checkpoints.
//!
//! Layout: the magic `EVTH1\n`, one header line of space-separated `key:value`
//! pairs, then the little-endian `f64` planes `g11 g12 g13 g22 g23 g33 k11 …
//! k33 n f`, each `npts³` values with x varying fastest. Header floats use the
//! shortest round-trip decimal form, so a reloaded checkpoint continues a run
//! bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use evth_core::{
    DomainSpec, GridSpec, MonitorReport, Progress, ScalarField, SliceState, SymTensorField,
};

use crate::error::RunError;

pub const MAGIC: &[u8] = b"EVTH1\n";

const FIELDS: &str = "g11,g12,g13,g22,g23,g33,k11,k12,k13,k22,k23,k33,n,f";
const PLANES: usize = 14;

macro_rules! report_fields {
    ($($name:ident),* $(,)?) => {
        fn report_pairs(r: &MonitorReport) -> Vec<(&'static str, f64)> {
            vec![$((stringify!($name), r.$name)),*]
        }

        fn set_report_field(r: &mut MonitorReport, key: &str, v: f64) -> bool {
            match key {
                $(stringify!($name) => r.$name = v,)*
                _ => return false,
            }
            true
        }

        const REPORT_FIELD_COUNT: usize = [$(stringify!($name)),*].len();
    };
}

report_fields!(
    tau,
    dt,
    gauge_residual,
    ham_sup,
    ham_l2,
    mom_sup,
    mom_l2,
    breakdown_pointwise,
    breakdown_sup,
    breakdown_integral_accum,
    pi_l1linf_accum,
    curvature_l2,
    spectrum_min,
    spectrum_max,
    domain_radius,
    wave_energy,
    proper_time,
    speed_integral,
    v_max,
    lapse_min,
    lapse_max,
    nk_sup,
    nk_integral,
);

/// A slice and, when saved mid-run, what is needed to continue the run.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub state: SliceState,
    pub progress: Option<Progress>,
}

fn header(s: &SliceState, progress: Option<&Progress>) -> String {
    let grid = s.grid();
    let mut h = format!(
        "npts:{} period:{:?} tau:{:?} fields:{FIELDS}",
        grid.npts(),
        grid.period(),
        s.tau()
    );
    if let Some(p) = progress {
        write!(h, " step:{} center_lapse:{:?}", p.step, p.center_lapse).unwrap();
        match p.domain {
            Some(d) => {
                let c = d.center();
                write!(
                    h,
                    " domain:{:?},{:?},{:?},{:?},{:?}",
                    c[0],
                    c[1],
                    c[2],
                    d.radius(),
                    d.halo()
                )
                .unwrap();
            }
            None => h.push_str(" domain:none"),
        }
        for (k, v) in report_pairs(&p.last) {
            write!(h, " report.{k}:{v:?}").unwrap();
        }
    }
    h
}

pub fn encode(s: &SliceState, progress: Option<&Progress>) -> Vec<u8> {
    let head = header(s, progress);
    let len = s.grid().len();
    let mut out = Vec::with_capacity(MAGIC.len() + head.len() + 1 + PLANES * len * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(head.as_bytes());
    out.push(b'\n');
    let planes = s
        .metric()
        .planes()
        .iter()
        .chain(s.extrinsic_curvature().planes())
        .map(|p| p.as_slice())
        .chain([s.lapse().values(), s.gauge_density().values()]);
    for p in planes {
        for v in p {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Write through a temporary file so a crash never leaves a half-written checkpoint at `path`.
pub fn write(path: &Path, s: &SliceState, progress: Option<&Progress>) -> Result<(), RunError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    std::fs::write(&tmp, encode(s, progress)).map_err(|e| RunError::io(path, e))?;
    std::fs::rename(&tmp, path).map_err(|e| RunError::io(path, e))
}

pub fn read(path: &Path) -> Result<Checkpoint, RunError> {
    let bytes = std::fs::read(path).map_err(|e| RunError::io(path, e))?;
    decode(&bytes).map_err(|reason| RunError::checkpoint(path, reason))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse()
        .map_err(|_| format!("header value {key}:{v} is not a number"))
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, String> {
    let rest = bytes
        .strip_prefix(MAGIC)
        .ok_or("missing EVTH1 magic")?;
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or("header line is not terminated")?;
    let head = std::str::from_utf8(&rest[..nl]).map_err(|_| "header is not UTF-8")?;
    let data = &rest[nl + 1..];

    let (mut npts, mut period, mut tau) = (None, None, None);
    let (mut step, mut center_lapse, mut domain) = (None, None, None);
    let mut report = MonitorReport::default();
    let mut report_seen = 0;
    for token in head.split_whitespace() {
        let (key, value) = token
            .split_once(':')
            .ok_or_else(|| format!("header token {token:?} is not key:value"))?;
        match key {
            "npts" => npts = Some(num::<usize>(key, value)?),
            "period" => period = Some(num::<f64>(key, value)?),
            "tau" => tau = Some(num::<f64>(key, value)?),
            "fields" if value == FIELDS => {}
            "fields" => return Err(format!("unsupported field order {value}")),
            "step" => step = Some(num::<usize>(key, value)?),
            "center_lapse" => center_lapse = Some(num::<f64>(key, value)?),
            "domain" if value == "none" => domain = Some(None),
            "domain" => {
                let v: Vec<f64> = value
                    .split(',')
                    .map(|x| num(key, x))
                    .collect::<Result<_, _>>()?;
                let [cx, cy, cz, r, halo] = v[..] else {
                    return Err(format!("domain needs 5 values, got {}", v.len()));
                };
                let d = DomainSpec::new([cx, cy, cz], r, halo).map_err(|e| e.to_string())?;
                domain = Some(Some(d));
            }
            _ => {
                let field = key
                    .strip_prefix("report.")
                    .ok_or_else(|| format!("unknown header key {key}"))?;
                if !set_report_field(&mut report, field, num(key, value)?) {
                    return Err(format!("unknown report field {field}"));
                }
                report_seen += 1;
            }
        }
    }
    let npts = npts.ok_or("header lacks npts")?;
    let period = period.ok_or("header lacks period")?;
    let tau = tau.ok_or("header lacks tau")?;
    let grid = GridSpec::new(npts, period).map_err(|e| e.to_string())?;

    let len = grid.len();
    let want = PLANES * len * 8;
    if data.len() != want {
        return Err(format!(
            "expected {want} bytes of field data for npts {npts}, found {}",
            data.len()
        ));
    }
    let mut planes = data.chunks_exact(len * 8).map(|chunk| {
        chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect::<Vec<f64>>()
    });
    let mut six = || -> [Vec<f64>; 6] { std::array::from_fn(|_| planes.next().unwrap()) };
    let g = six();
    let k = six();
    let (n, f) = (planes.next().unwrap(), planes.next().unwrap());

    let err = |e: evth_core::Error| e.to_string();
    let state = SliceState::new(
        SymTensorField::new(grid, g).map_err(err)?,
        SymTensorField::new(grid, k).map_err(err)?,
        ScalarField::new(grid, n).map_err(err)?,
        ScalarField::new(grid, f).map_err(err)?,
        tau,
    )
    .map_err(err)?;

    let progress = match (step, center_lapse, domain) {
        (None, None, None) if report_seen == 0 => None,
        (Some(step), Some(center_lapse), Some(domain)) if report_seen == REPORT_FIELD_COUNT => {
            report.step = step;
            Some(Progress {
                step,
                last: report,
                center_lapse,
                domain,
            })
        }
        _ => return Err("incomplete run progress in header".into()),
    };
    Ok(Checkpoint { state, progress })
}

#[cfg(test)]
mod tests {
    use super::*;
    use evth_core::{perturbed_flat, Evolver, EvolutionConfig, MonitorConfig};

    fn sample() -> (SliceState, Progress) {
        let grid = GridSpec::new(8, 2.0).unwrap();
        let s0 = perturbed_flat(grid, 1e-4, [1, 0, 2]).unwrap();
        let monitors = MonitorConfig {
            domain: Some(DomainSpec::new([1.0; 3], 0.9, 0.1).unwrap()),
            ..Default::default()
        };
        let mut ev = Evolver::new(s0, &EvolutionConfig::default(), &monitors).unwrap();
        ev.advance();
        (ev.state().clone(), *ev.progress())
    }

    #[test]
    fn state_and_progress_survive_a_round_trip() {
        let (s, p) = sample();
        let back = decode(&encode(&s, Some(&p))).unwrap();
        assert_eq!(back.state.metric(), s.metric());
        assert_eq!(back.state.gauge_density(), s.gauge_density());
        assert_eq!(back.state.tau().to_bits(), s.tau().to_bits());
        assert_eq!(back.progress, Some(p));
        let plain = decode(&encode(&s, None)).unwrap();
        assert!(plain.progress.is_none());
    }

    #[test]
    fn damaged_files_are_rejected() {
        let (s, p) = sample();
        let bytes = encode(&s, Some(&p));
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(&bytes[..40]).is_err());
        let mut wrong = bytes.clone();
        wrong[4] = b'2';
        assert!(decode(&wrong).unwrap_err().contains("magic"));
        let text = String::from_utf8_lossy(&bytes[..200]).replace("step:", "stop:");
        let mut renamed = text.into_bytes();
        renamed.extend_from_slice(&bytes[200..]);
        assert!(decode(&renamed).is_err());
    }
}
