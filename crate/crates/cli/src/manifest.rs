//! Run manifest: a TOML file whose every field has a default, so an empty
//! file is a valid manifest. Command-line flags are applied on top and the
//! resolved manifest is what gets hashed and echoed next to the outputs.

use std::path::{Path, PathBuf};

use coldplasma::characteristics::{DomainMode, SigmaMode};
use coldplasma::perturbation::Sigma0Form;
use coldplasma::DampingSpec64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Affine,
    Phase,
    Corrector,
    Sigma0,
    Field,
    EulerAnalog,
    GammaSweep,
    ConditionCheck,
    Figures,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Affine => "affine",
            Kind::Phase => "phase",
            Kind::Corrector => "corrector",
            Kind::Sigma0 => "sigma0",
            Kind::Field => "field",
            Kind::EulerAnalog => "euler-analog",
            Kind::GammaSweep => "gamma-sweep",
            Kind::ConditionCheck => "condition-check",
            Kind::Figures => "figures",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Manifest {
    /// Scenario name; also the default output subdirectory.
    pub name: Option<String>,
    /// When present, the manifest may only be run by the matching subcommand.
    pub kind: Option<Kind>,
    /// Output subdirectory relative to the output root.
    pub output: Option<String>,
    pub damping: DampingSection,
    pub affine: AffineSection,
    pub phase: PhaseSection,
    pub corrector: CorrectorSection,
    pub sigma0: Sigma0Section,
    pub field: FieldSection,
    pub sweep: SweepSection,
    pub figures: FiguresSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DampingKind {
    PowerLaw,
    Undamped,
}

/// `nu(n) = epsilon * nu0 * n^gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DampingSection {
    pub form: DampingKind,
    pub nu0: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for DampingSection {
    fn default() -> Self {
        Self {
            form: DampingKind::PowerLaw,
            nu0: 1.0,
            gamma: 2.0,
            epsilon: 0.8,
        }
    }
}

impl DampingSection {
    pub fn spec(&self) -> Result<DampingSpec64> {
        self.spec_with(self.gamma, self.epsilon)
    }

    pub fn spec_with(&self, gamma: f64, epsilon: f64) -> Result<DampingSpec64> {
        let spec = match self.form {
            DampingKind::PowerLaw => DampingSpec64::power_law(self.nu0, gamma, epsilon),
            DampingKind::Undamped => DampingSpec64::power_law(1.0, 0.0, 0.0),
        };
        spec.map_err(|e| CliError::field("damping", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AffineSection {
    pub a0: f64,
    pub b0: f64,
    pub v_offset: f64,
    pub e_offset: f64,
    pub t_end: f64,
    pub tol: f64,
    /// Integrate the offset equation with the friction sign flipped.
    pub flipped_offset_sign: bool,
}

impl Default for AffineSection {
    fn default() -> Self {
        Self {
            a0: 2.0,
            b0: 0.5,
            v_offset: 0.0,
            e_offset: 0.0,
            t_end: 100.0,
            tol: 1e-10,
            flipped_offset_sign: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSection {
    pub b_min: f64,
    pub b_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub grid: usize,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            b_min: -4.0,
            b_max: 0.9,
            a_min: -4.0,
            a_max: 4.0,
            grid: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectorSection {
    pub c: f64,
    pub b0: f64,
    /// Deepest `b`; the grid is logarithmic in `b0 - b`.
    pub b_min: f64,
    pub points: usize,
}

impl Default for CorrectorSection {
    fn default() -> Self {
        Self {
            c: 4.0,
            b0: 0.0,
            b_min: -1e4,
            points: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchChoice {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sigma0Choice {
    Standard,
    Differentiated,
}

impl From<Sigma0Choice> for Sigma0Form {
    fn from(c: Sigma0Choice) -> Self {
        match c {
            Sigma0Choice::Standard => Sigma0Form::Standard,
            Sigma0Choice::Differentiated => Sigma0Form::Differentiated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sigma0Section {
    pub c: f64,
    pub s_start: f64,
    pub s_end: f64,
    pub sigma0: f64,
    pub xi0: f64,
    pub branch: BranchChoice,
    pub form: Sigma0Choice,
    pub samples: usize,
}

impl Default for Sigma0Section {
    fn default() -> Self {
        Self {
            c: 1.0,
            s_start: -0.5,
            s_end: -5.0,
            sigma0: 1.0,
            xi0: 0.0,
            branch: BranchChoice::Lower,
            form: Sigma0Choice::Standard,
            samples: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatumKind {
    /// `V0 = 0`, `E0 = d sin(2 pi x / L)`.
    ZeroVelocitySine,
    /// `V0 = drift - d sin(2 pi x / L)`, `E0 = d sin(2 pi x / L)`.
    DriftingSine,
    /// `V0 = a0 x + v_offset`, `E0 = b0 x + e_offset` on `[-L/2, L/2]`.
    Affine,
    /// Samples `x,V,E` read from a CSV file.
    CustomTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainChoice {
    Periodic,
    Truncated,
}

impl From<DomainChoice> for DomainMode {
    fn from(d: DomainChoice) -> Self {
        match d {
            DomainChoice::Periodic => DomainMode::Periodic,
            DomainChoice::Truncated => DomainMode::Truncated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaChoice {
    Reconstructed,
    Zero,
}

impl From<SigmaChoice> for SigmaMode {
    fn from(s: SigmaChoice) -> Self {
        match s {
            SigmaChoice::Reconstructed => SigmaMode::Reconstructed,
            SigmaChoice::Zero => SigmaMode::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSection {
    pub datum: DatumKind,
    pub d: f64,
    pub drift: f64,
    pub a0: f64,
    pub b0: f64,
    pub v_offset: f64,
    pub e_offset: f64,
    /// Domain length `L`.
    pub length: f64,
    /// CSV with columns `x,V,E` for the custom-table datum.
    pub table: Option<PathBuf>,
    pub domain: DomainChoice,
    pub sigma: SigmaChoice,
    pub particles: usize,
    pub t_end: f64,
    pub tol: f64,
    pub snapshot_every: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self {
            datum: DatumKind::ZeroVelocitySine,
            d: 0.9,
            drift: 0.0,
            a0: 1.0,
            b0: 0.0,
            v_offset: 0.0,
            e_offset: 0.0,
            length: std::f64::consts::TAU,
            table: None,
            domain: DomainChoice::Periodic,
            sigma: SigmaChoice::Reconstructed,
            particles: 256,
            t_end: 50.0,
            tol: 1e-8,
            snapshot_every: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub gammas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub ds: Vec<f64>,
    pub particles: usize,
    pub t_end: f64,
    pub tol: f64,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            gammas: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
            epsilons: vec![0.5],
            ds: vec![0.9],
            particles: 256,
            t_end: 200.0,
            tol: 1e-8,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiguresSection {
    pub a0: f64,
    pub b0: f64,
    pub fig1_epsilon: f64,
    pub fig1_t_end: f64,
    pub fig2_epsilon: f64,
    pub fig2_t_end: f64,
    pub tol: f64,
}

impl Default for FiguresSection {
    fn default() -> Self {
        Self {
            a0: 2.0,
            b0: 0.5,
            fig1_epsilon: 0.8,
            fig1_t_end: 50.0,
            fig2_epsilon: 1.0,
            fig2_t_end: 30.0,
            tol: 1e-10,
        }
    }
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Manifest(e.message().to_string() + &span_hint(&e)))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Manifest(m) => CliError::Manifest(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical serialization of the resolved manifest.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    /// SHA-256 of the canonical form together with the running command.
    pub fn hash(&self, kind: Kind) -> String {
        let mut h = Sha256::new();
        h.update(kind.as_str().as_bytes());
        h.update(b"\n");
        h.update(self.canonical().as_bytes());
        hex::encode(h.finalize())
    }

    /// Output subdirectory: `output`, else `name`, else the command.
    pub fn output_dir(&self, kind: Kind) -> String {
        self.output
            .clone()
            .or_else(|| self.name.clone())
            .unwrap_or_else(|| kind.as_str().to_string())
    }

    /// Checks the sections used by `kind`; nothing is run or written before this.
    pub fn validate(&self, kind: Kind) -> Result<()> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(CliError::field(
                    "kind",
                    format!("manifest is for `{}`, not `{}`", k.as_str(), kind.as_str()),
                ));
            }
        }
        match kind {
            Kind::Affine | Kind::Phase => {
                self.damping.spec()?;
                let a = &self.affine;
                check_density("affine.b0", a.b0)?;
                check_positive("affine.t_end", a.t_end)?;
                check_tol("affine.tol", a.tol)?;
                check_finite("affine.a0", a.a0)?;
                if kind == Kind::Phase {
                    let p = &self.phase;
                    if !(p.b_min < p.b_max && p.b_max < 1.0) {
                        return Err(CliError::field("phase.b_min/b_max", "need b_min < b_max < 1"));
                    }
                    if !(p.a_min < p.a_max) {
                        return Err(CliError::field("phase.a_min/a_max", "need a_min < a_max"));
                    }
                    if p.grid < 2 {
                        return Err(CliError::field("phase.grid", "need at least 2 points per axis"));
                    }
                }
            }
            Kind::Corrector => {
                self.damping.spec()?;
                let c = &self.corrector;
                if !(c.c >= 0.0) {
                    return Err(CliError::field("corrector.c", "the corrector needs C >= 0"));
                }
                check_density("corrector.b0", c.b0)?;
                if !(c.b_min < c.b0) {
                    return Err(CliError::field("corrector.b_min", "must lie below b0"));
                }
                if c.points < 2 {
                    return Err(CliError::field("corrector.points", "need at least 2 points"));
                }
            }
            Kind::Sigma0 => {
                let s = &self.sigma0;
                check_density("sigma0.s_start", s.s_start)?;
                check_density("sigma0.s_end", s.s_end)?;
                if s.samples < 3 {
                    return Err(CliError::field("sigma0.samples", "need at least 3 samples for a fit"));
                }
                check_finite("sigma0.c", s.c)?;
            }
            Kind::Field | Kind::EulerAnalog => {
                self.damping.spec()?;
                self.validate_field()?;
            }
            Kind::GammaSweep => {
                let s = &self.sweep;
                for &g in &s.gammas {
                    for &e in &s.epsilons {
                        self.damping
                            .spec_with(g, e)
                            .map_err(|err| CliError::field("sweep.gammas/epsilons", err.to_string()))?;
                    }
                }
                for &d in &s.ds {
                    if !((0.0..1.0).contains(&d)) {
                        return Err(CliError::field("sweep.ds", format!("amplitude {d} outside [0, 1)")));
                    }
                }
                check_particles("sweep.particles", s.particles)?;
                check_positive("sweep.t_end", s.t_end)?;
                check_tol("sweep.tol", s.tol)?;
            }
            Kind::ConditionCheck => {
                self.damping.spec()?;
            }
            Kind::Figures => {
                self.damping.spec()?;
                let f = &self.figures;
                check_density("figures.b0", f.b0)?;
                check_positive("figures.fig1_t_end", f.fig1_t_end)?;
                check_positive("figures.fig2_t_end", f.fig2_t_end)?;
                check_tol("figures.tol", f.tol)?;
                for (name, e) in [
                    ("figures.fig1_epsilon", f.fig1_epsilon),
                    ("figures.fig2_epsilon", f.fig2_epsilon),
                ] {
                    if !(e.is_finite() && e >= 0.0) {
                        return Err(CliError::field(name, "must be a nonnegative number"));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_field(&self) -> Result<()> {
        let f = &self.field;
        check_particles("field.particles", f.particles)?;
        check_positive("field.t_end", f.t_end)?;
        check_tol("field.tol", f.tol)?;
        check_positive("field.snapshot_every", f.snapshot_every)?;
        check_positive("field.length", f.length)?;
        match f.datum {
            DatumKind::ZeroVelocitySine | DatumKind::DriftingSine => {
                if !(f.d.is_finite() && f.d >= 0.0 && f.d < 1.0) {
                    return Err(CliError::field(
                        "field.d",
                        "the sine amplitude must lie in [0, 1) for positive density",
                    ));
                }
                if f.domain == DomainChoice::Truncated {
                    return Err(CliError::field("field.domain", "sine data are periodic"));
                }
            }
            DatumKind::Affine => {
                check_density("field.b0", f.b0)?;
                if f.domain == DomainChoice::Periodic {
                    return Err(CliError::field("field.domain", "affine data need the truncated domain"));
                }
            }
            DatumKind::CustomTable => {
                if f.table.is_none() {
                    return Err(CliError::field("field.table", "custom-table datum needs a table path"));
                }
            }
        }
        Ok(())
    }
}

fn span_hint(e: &toml::de::Error) -> String {
    e.span().map(|s| format!(" (at byte {})", s.start)).unwrap_or_default()
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::field(name, "must be finite"))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::field(name, format!("must be positive, got {v}")))
    }
}

fn check_tol(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1e-3 {
        Ok(())
    } else {
        Err(CliError::field(name, format!("must lie in (0, 1e-3], got {v}")))
    }
}

fn check_density(name: &str, b: f64) -> Result<()> {
    if b.is_finite() && b < 1.0 {
        Ok(())
    } else {
        Err(CliError::field(
            name,
            format!("must be below 1 so that the density 1 - b is positive, got {b}"),
        ))
    }
}

fn check_particles(name: &str, n: usize) -> Result<()> {
    if n >= coldplasma::characteristics::MIN_PARTICLES {
        Ok(())
    } else {
        Err(CliError::field(
            name,
            format!(
                "need at least {} particles, got {n}",
                coldplasma::characteristics::MIN_PARTICLES
            ),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_manifest_is_the_default() {
        assert_eq!(Manifest::parse("").unwrap(), Manifest::default());
    }

    #[test]
    fn unknown_fields_are_rejected_by_name() {
        let err = Manifest::parse("[damping]\ngama = 2.0\n").unwrap_err().to_string();
        assert!(err.contains("gama"), "{err}");
    }

    #[test]
    fn canonical_form_round_trips() {
        let mut m = Manifest::default();
        m.sweep.gammas = vec![];
        m.field.table = Some("x.csv".into());
        assert_eq!(Manifest::parse(&m.canonical()).unwrap(), m);
    }

    #[test]
    fn hash_depends_on_content_and_command() {
        let m = Manifest::default();
        let mut n = m.clone();
        n.damping.gamma = 1.5;
        assert_ne!(m.hash(Kind::Affine), n.hash(Kind::Affine));
        assert_ne!(m.hash(Kind::Affine), m.hash(Kind::Phase));
        assert_eq!(m.hash(Kind::Affine), m.clone().hash(Kind::Affine));
    }

    #[test]
    fn validation_names_the_offending_field() {
        let mut m = Manifest::default();
        m.affine.b0 = 1.5;
        assert!(m.validate(Kind::Affine).unwrap_err().to_string().contains("affine.b0"));
        let mut m = Manifest::default();
        m.field.particles = 4;
        assert!(m
            .validate(Kind::Field)
            .unwrap_err()
            .to_string()
            .contains("field.particles"));
        let m = Manifest {
            kind: Some(Kind::Sigma0),
            ..Manifest::default()
        };
        assert!(m.validate(Kind::Affine).unwrap_err().to_string().contains("kind"));
    }
}
