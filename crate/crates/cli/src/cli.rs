//! Command-line front end. Every flag is optional and, when given, replaces
//! the corresponding manifest entry.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Result;
use crate::manifest::{BranchChoice, DampingKind, DatumKind, DomainChoice, Kind, Manifest, Sigma0Choice, SigmaChoice};
use crate::output::Artifacts;
use crate::scenarios;

/// Environment variable naming the output root.
pub const OUT_ENV: &str = "COLDPLASMA_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "coldplasma",
    version,
    about = "Cold-plasma oscillations with density-dependent damping"
)]
pub struct Cli {
    /// TOML manifest; omitted entries take their defaults.
    #[arg(short, long, global = true)]
    pub manifest: Option<PathBuf>,

    /// Root directory for outputs.
    #[arg(long, global = true, env = OUT_ENV, default_value = "out")]
    pub out_root: PathBuf,

    /// Output subdirectory (defaults to the scenario name, then the command).
    #[arg(short, long, global = true)]
    pub output: Option<String>,

    /// Scenario name recorded in the manifest echo.
    #[arg(long, global = true)]
    pub name: Option<String>,

    /// Do not print the summary.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the affine (linear-profile) solution.
    AffineRun {
        #[command(flatten)]
        damping: DampingArgs,
        #[command(flatten)]
        affine: AffineArgs,
    },
    /// Phase curve in the (b, a) plane with its direction field.
    Phase {
        #[command(flatten)]
        damping: DampingArgs,
        #[command(flatten)]
        affine: AffineArgs,
        /// Direction-field points per axis.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// First-order corrector in epsilon along the conic.
    Corrector {
        #[command(flatten)]
        damping: DampingArgs,
        /// Conic constant C.
        #[arg(long)]
        c: Option<f64>,
        /// Initial b = E_x.
        #[arg(long)]
        b0: Option<f64>,
        /// Deepest b reached (large negative: high density).
        #[arg(long, allow_hyphen_values = true)]
        b_min: Option<f64>,
        /// Output samples along the conic.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Second-derivative system along the conic and its closed-form fit.
    Sigma0 {
        /// Conic constant C.
        #[arg(long)]
        c: Option<f64>,
        /// First sample of the conic parameter s.
        #[arg(long, allow_hyphen_values = true)]
        s_start: Option<f64>,
        /// Last sample of the conic parameter s.
        #[arg(long, allow_hyphen_values = true)]
        s_end: Option<f64>,
        /// Initial second derivative sigma0.
        #[arg(long, allow_hyphen_values = true)]
        sigma0: Option<f64>,
        /// Initial xi0.
        #[arg(long, allow_hyphen_values = true)]
        xi0: Option<f64>,
        /// Conic branch.
        #[arg(long, value_enum)]
        branch: Option<BranchArg>,
        /// Form of the second-derivative system.
        #[arg(long, value_enum)]
        form: Option<FormArg>,
        /// Output samples.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Full-field run on an ensemble of characteristics.
    FieldRun {
        #[command(flatten)]
        damping: DampingArgs,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Same ensemble without the Poisson coupling.
    EulerAnalog {
        #[command(flatten)]
        damping: DampingArgs,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Field runs over a grid of damping exponents, strengths and amplitudes.
    Sweep {
        /// Damping prefactor nu0.
        #[arg(long)]
        nu0: Option<f64>,
        /// Comma-separated damping exponents.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        gamma_list: Option<Vec<f64>>,
        /// Comma-separated damping strengths.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        epsilon_list: Option<Vec<f64>>,
        /// Comma-separated sine amplitudes.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        d_list: Option<Vec<f64>>,
        /// Number of characteristics.
        #[arg(short = 'n', long)]
        particles: Option<usize>,
        /// Final time.
        #[arg(long)]
        t_end: Option<f64>,
        /// Integrator tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Worker threads (0: one per core).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Evaluate the analytic conditions on the damping shape.
    CheckCondition {
        #[command(flatten)]
        damping: DampingArgs,
    },
    /// Data and scripts for the phase-plane and time-series figures.
    Figures {
        #[command(flatten)]
        damping: DampingArgs,
        /// Initial a = V_x.
        #[arg(long)]
        a0: Option<f64>,
        /// Initial b = E_x.
        #[arg(long, allow_hyphen_values = true)]
        b0: Option<f64>,
        /// Damping strength of the damped phase curve.
        #[arg(long)]
        fig1_epsilon: Option<f64>,
        /// Damping strength of the damped time series.
        #[arg(long)]
        fig2_epsilon: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct DampingArgs {
    /// Damping prefactor nu0.
    #[arg(long)]
    pub nu0: Option<f64>,
    /// Density exponent gamma in f(n) = nu0 n^gamma.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Damping strength epsilon.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Ignore the damping block and run without friction.
    #[arg(long)]
    pub undamped: bool,
}

#[derive(Debug, Args)]
pub struct AffineArgs {
    /// Initial a = V_x.
    #[arg(long, allow_hyphen_values = true)]
    pub a0: Option<f64>,
    /// Initial b = E_x.
    #[arg(long, allow_hyphen_values = true)]
    pub b0: Option<f64>,
    /// Offset of V at the origin.
    #[arg(long, allow_hyphen_values = true)]
    pub v_offset: Option<f64>,
    /// Offset of E at the origin.
    #[arg(long, allow_hyphen_values = true)]
    pub e_offset: Option<f64>,
    /// Final time.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Integrator tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Integrate the offset equation with the friction term's sign flipped.
    #[arg(long, alias = "paper-sign")]
    pub flipped_offset_sign: bool,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Initial data.
    #[arg(long, value_enum)]
    pub datum: Option<DatumArg>,
    /// Sine amplitude.
    #[arg(short, long)]
    pub d: Option<f64>,
    /// Mean velocity of the drifting-sine datum.
    #[arg(long, allow_hyphen_values = true)]
    pub drift: Option<f64>,
    /// Domain length.
    #[arg(long)]
    pub length: Option<f64>,
    /// CSV with columns x,V,E (custom-table datum).
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Periodic or truncated domain.
    #[arg(long, value_enum)]
    pub domain: Option<DomainArg>,
    /// Second-derivative seed: reconstructed from the data or zero.
    #[arg(long, value_enum)]
    pub sigma: Option<SigmaArg>,
    /// Number of characteristics.
    #[arg(short = 'n', long)]
    pub particles: Option<usize>,
    /// Final time.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Integrator tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Time between snapshots.
    #[arg(long)]
    pub snapshot_every: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BranchArg {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormArg {
    Standard,
    Differentiated,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DatumArg {
    ZeroVelocitySine,
    DriftingSine,
    Affine,
    CustomTable,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DomainArg {
    Periodic,
    Truncated,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SigmaArg {
    Reconstructed,
    Zero,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl DampingArgs {
    fn apply(self, m: &mut Manifest) {
        set(&mut m.damping.nu0, self.nu0);
        set(&mut m.damping.gamma, self.gamma);
        set(&mut m.damping.epsilon, self.epsilon);
        if self.undamped {
            m.damping.form = DampingKind::Undamped;
        }
    }
}

impl AffineArgs {
    fn apply(self, m: &mut Manifest) {
        let a = &mut m.affine;
        set(&mut a.a0, self.a0);
        set(&mut a.b0, self.b0);
        set(&mut a.v_offset, self.v_offset);
        set(&mut a.e_offset, self.e_offset);
        set(&mut a.t_end, self.t_end);
        set(&mut a.tol, self.tol);
        a.flipped_offset_sign |= self.flipped_offset_sign;
    }
}

impl FieldArgs {
    fn apply(self, m: &mut Manifest) {
        let f = &mut m.field;
        set(
            &mut f.datum,
            self.datum.map(|d| match d {
                DatumArg::ZeroVelocitySine => DatumKind::ZeroVelocitySine,
                DatumArg::DriftingSine => DatumKind::DriftingSine,
                DatumArg::Affine => DatumKind::Affine,
                DatumArg::CustomTable => DatumKind::CustomTable,
            }),
        );
        set(&mut f.d, self.d);
        set(&mut f.drift, self.drift);
        set(&mut f.length, self.length);
        if self.table.is_some() {
            f.table = self.table;
        }
        set(
            &mut f.domain,
            self.domain.map(|d| match d {
                DomainArg::Periodic => DomainChoice::Periodic,
                DomainArg::Truncated => DomainChoice::Truncated,
            }),
        );
        set(
            &mut f.sigma,
            self.sigma.map(|s| match s {
                SigmaArg::Reconstructed => SigmaChoice::Reconstructed,
                SigmaArg::Zero => SigmaChoice::Zero,
            }),
        );
        set(&mut f.particles, self.particles);
        set(&mut f.t_end, self.t_end);
        set(&mut f.tol, self.tol);
        set(&mut f.snapshot_every, self.snapshot_every);
    }
}

impl Command {
    pub fn kind(&self) -> Kind {
        match self {
            Command::AffineRun { .. } => Kind::Affine,
            Command::Phase { .. } => Kind::Phase,
            Command::Corrector { .. } => Kind::Corrector,
            Command::Sigma0 { .. } => Kind::Sigma0,
            Command::FieldRun { .. } => Kind::Field,
            Command::EulerAnalog { .. } => Kind::EulerAnalog,
            Command::Sweep { .. } => Kind::GammaSweep,
            Command::CheckCondition { .. } => Kind::ConditionCheck,
            Command::Figures { .. } => Kind::Figures,
        }
    }

    /// Applies the command's flags on top of `m`.
    pub fn apply(self, m: &mut Manifest) {
        match self {
            Command::AffineRun { damping, affine } => {
                damping.apply(m);
                affine.apply(m);
            }
            Command::Phase { damping, affine, grid } => {
                damping.apply(m);
                affine.apply(m);
                set(&mut m.phase.grid, grid);
            }
            Command::Corrector {
                damping,
                c,
                b0,
                b_min,
                points,
            } => {
                damping.apply(m);
                set(&mut m.corrector.c, c);
                set(&mut m.corrector.b0, b0);
                set(&mut m.corrector.b_min, b_min);
                set(&mut m.corrector.points, points);
            }
            Command::Sigma0 {
                c,
                s_start,
                s_end,
                sigma0,
                xi0,
                branch,
                form,
                samples,
            } => {
                let s = &mut m.sigma0;
                set(&mut s.c, c);
                set(&mut s.s_start, s_start);
                set(&mut s.s_end, s_end);
                set(&mut s.sigma0, sigma0);
                set(&mut s.xi0, xi0);
                set(
                    &mut s.branch,
                    branch.map(|b| match b {
                        BranchArg::Upper => BranchChoice::Upper,
                        BranchArg::Lower => BranchChoice::Lower,
                    }),
                );
                set(
                    &mut s.form,
                    form.map(|f| match f {
                        FormArg::Standard => Sigma0Choice::Standard,
                        FormArg::Differentiated => Sigma0Choice::Differentiated,
                    }),
                );
                set(&mut s.samples, samples);
            }
            Command::FieldRun { damping, field } | Command::EulerAnalog { damping, field } => {
                damping.apply(m);
                field.apply(m);
            }
            Command::Sweep {
                nu0,
                gamma_list,
                epsilon_list,
                d_list,
                particles,
                t_end,
                tol,
                workers,
            } => {
                set(&mut m.damping.nu0, nu0);
                let s = &mut m.sweep;
                set(&mut s.gammas, gamma_list);
                set(&mut s.epsilons, epsilon_list);
                set(&mut s.ds, d_list);
                set(&mut s.particles, particles);
                set(&mut s.t_end, t_end);
                set(&mut s.tol, tol);
                set(&mut s.workers, workers);
            }
            Command::CheckCondition { damping } => damping.apply(m),
            Command::Figures {
                damping,
                a0,
                b0,
                fig1_epsilon,
                fig2_epsilon,
            } => {
                damping.apply(m);
                let f = &mut m.figures;
                set(&mut f.a0, a0);
                set(&mut f.b0, b0);
                set(&mut f.fig1_epsilon, fig1_epsilon);
                set(&mut f.fig2_epsilon, fig2_epsilon);
            }
        }
    }
}

/// Runs the scenario for `kind` on a resolved, validated manifest.
pub fn execute(kind: Kind, m: &Manifest) -> Result<Artifacts> {
    m.validate(kind)?;
    match kind {
        Kind::Affine => scenarios::affine_run(m),
        Kind::Phase => scenarios::phase(m),
        Kind::Corrector => scenarios::corrector(m),
        Kind::Sigma0 => scenarios::sigma0(m),
        Kind::Field => scenarios::field_run(m, false),
        Kind::EulerAnalog => scenarios::field_run(m, true),
        Kind::GammaSweep => scenarios::gamma_threshold_sweep(m).map(|(_, a)| a),
        Kind::ConditionCheck => scenarios::check_condition(m),
        Kind::Figures => scenarios::figures(m),
    }
}

/// Parses nothing; resolves, runs and writes. Returns the written paths.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let mut manifest = match &cli.manifest {
        Some(p) => Manifest::load(p)?,
        None => Manifest::default(),
    };
    let kind = cli.command.kind();
    if let Some(name) = cli.name {
        manifest.name = Some(name);
    }
    if let Some(out) = cli.output {
        manifest.output = Some(out);
    }
    cli.command.apply(&mut manifest);
    let art = execute(kind, &manifest)?;
    if !cli.quiet {
        print!("{}", art.summary);
    }
    let dir = cli.out_root.join(manifest.output_dir(kind));
    let written = art.write(&dir, &manifest, kind)?;
    if !cli.quiet {
        println!("wrote {} files to {}", written.len(), dir.display());
    }
    Ok(written)
}
