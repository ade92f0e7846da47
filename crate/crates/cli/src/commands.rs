use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use hkperiod::curve::PolynomialCurve;
use hkperiod::d2_model::{self, D2Point, Mat2};
use hkperiod::disk_chains::{self, DiskChain};
use hkperiod::indefinite_linear::QuadraticSpace;
use hkperiod::io::{self, CurveSpec, SpaceSpec};
use hkperiod::lattice_transport::{self as lt, TransportOptions, WallSet};
use hkperiod::linalg::{self, C64};
use hkperiod::nevanlinna::{self as nv, Constants};
use hkperiod::period_domain::{self as pd, Domain, Membership, PeriodPoint, TangentRep};
use hkperiod::quadrature::PolarRule;
use hkperiod::rng::{complex_normal, seeded, SeededRng};
use hkperiod::tolerances::{acceptance, Tolerances, CALIBRATION_SPREAD};
use hkperiod::Error;
use rand::Rng;

use crate::config::{CurveChoice, PairSpec, RunConfig, VectorSpec};
use crate::output::{c, r, CliError, CliResult, Table};

type Space = QuadraticSpace<f64>;

pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub tol: Tolerances,
    pub recalibrate: bool,
    pub config: RunConfig,
}

impl Context {
    fn rng(&self) -> SeededRng {
        seeded(self.seed)
    }

    fn space(&self) -> CliResult<Arc<Space>> {
        let spec = self.config.space.clone().unwrap_or_else(|| SpaceSpec::standard(19));
        Ok(Arc::new(spec.build()?))
    }

    fn table(&self, name: &str, header: &[&str]) -> CliResult<Table> {
        Table::create(&self.out, name, header)
    }

    fn rule(&self) -> PolarRule {
        PolarRule {
            rel_tol: self.tol.quad_rel,
            ..PolarRule::default()
        }
    }
}

fn standard(p: usize) -> CliResult<Arc<Space>> {
    Ok(Arc::new(Space::standard(p)?))
}

fn vector(space: &Space, spec: &VectorSpec) -> CliResult<Vec<C64>> {
    let v = io::vector(spec);
    space.check_len(v.len())?;
    Ok(v)
}

/// `e₁ + i e₂`.
fn base_point(n: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); n];
    v[0] = C64::new(1.0, 0.0);
    v[1] = C64::new(0.0, 1.0);
    v
}

fn membership_name(m: Membership) -> &'static str {
    match m {
        Membership::InD => "IN_D",
        Membership::InBoundaryQuadric => "IN_BOUNDARY_QUADRIC",
        Membership::InOmegaOnly => "IN_OMEGA_ONLY",
        Membership::Outside => "OUTSIDE",
    }
}

fn point_of(space: &Arc<Space>, sigma: &[C64], tol: &Tolerances) -> CliResult<Option<PeriodPoint>> {
    Ok(match pd::membership(space, sigma, tol.isotropy_rel)? {
        Membership::InD => Some(PeriodPoint::in_d_tol(space.clone(), sigma, tol.isotropy_rel)?),
        Membership::InOmegaOnly => Some(PeriodPoint::in_omega(space.clone(), sigma)?),
        _ => None,
    })
}

pub fn domain(ctx: &Context) -> CliResult<()> {
    let space = ctx.space()?;
    let cfg = &ctx.config.domain;
    let n = space.dim();
    let mut rng = ctx.rng();
    let mut points: Vec<(&str, Vec<C64>)> = match &cfg.points {
        Some(list) => list
            .iter()
            .map(|p| Ok(("given", vector(&space, p)?)))
            .collect::<CliResult<_>>()?,
        None => {
            let e = |i| linalg::cunit_vector(n, i);
            vec![
                ("given", base_point(n)),
                ("given", linalg::add(&e(0), &e(1))),
                ("given", linalg::add(&e(0), &e(3))),
                ("given", e(3)),
            ]
        }
    };
    for _ in 0..cfg.random_d {
        points.push(("random_d", pd::random_point_in_d(&space, &mut rng)?.rep().to_vec()));
    }
    for _ in 0..cfg.random_omega {
        points.push(("random_omega", pd::random_point_in_omega(&space, &mut rng)?.rep().to_vec()));
    }
    let mut t = ctx.table(
        "domain.csv",
        &["point_index", "source", "membership", "q_rel", "h_rel", "metric_positive", "metric_negative"],
    )?;
    for (k, (source, sigma)) in points.iter().enumerate() {
        let m = pd::membership(&space, sigma, ctx.tol.isotropy_rel)?;
        let n2 = linalg::norm(sigma).powi(2);
        let (pos, neg) = match point_of(&space, sigma, &ctx.tol)? {
            Some(x) => {
                let s = pd::metric_signature_at(&x)?;
                (s.positive.to_string(), s.negative.to_string())
            }
            None => (String::new(), String::new()),
        };
        t.row(vec![
            k.to_string(),
            source.to_string(),
            membership_name(m).into(),
            r(space.q(sigma, sigma).norm() / n2),
            r(space.hnorm(sigma) / n2),
            pos,
            neg,
        ])?;
    }
    t.finish()
}

pub fn metric(ctx: &Context) -> CliResult<()> {
    let space = ctx.space()?;
    let points: Vec<Vec<C64>> = match &ctx.config.metric.points {
        Some(list) => list.iter().map(|p| vector(&space, p)).collect::<CliResult<_>>()?,
        None => vec![base_point(space.dim())],
    };
    let mut sig = ctx.table("signature.csv", &["positive", "negative"])?;
    let mut mat = ctx.table("metric_matrix.csv", &["point_index", "chart", "row", "col", "value"])?;
    for (k, sigma) in points.iter().enumerate() {
        let x = point_of(&space, sigma, &ctx.tol)?
            .ok_or_else(|| Error::NotInDomain(format!("metric point {k} is outside Ω")))?;
        let s = pd::metric_signature_at(&x)?;
        sig.row(vec![s.positive.to_string(), s.negative.to_string()])?;
        let mut charts = vec![("omega", Domain::Omega)];
        if x.is_isotropic() {
            charts.push(("d", Domain::D));
        }
        for (name, which) in charts {
            let m = pd::metric_matrix_chart(&space, sigma, which)?;
            for (i, row) in m.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    mat.row(vec![k.to_string(), name.into(), i.to_string(), j.to_string(), c(*v)])?;
                }
            }
        }
    }
    sig.finish()?;
    mat.finish()
}

pub fn hsc(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.config.hsc;
    let mut rng = ctx.rng();
    let mut samples = ctx.table("hsc.csv", &["p", "point_index", "direction_index", "hsc"])?;
    let mut summary = ctx.table("hsc_summary.csv", &["p", "gamma", "spread", "samples"])?;
    let mut worst: Option<(usize, f64)> = None;
    for &p in &cfg.p_values {
        let space = standard(p)?;
        let values = nv::sample_hsc(&space, cfg.points, cfg.directions, ctx.tol.fd_step, &mut rng)?;
        for s in &values {
            samples.row(vec![p.to_string(), s.point.to_string(), s.direction.to_string(), r(s.hsc)])?;
        }
        let est = nv::summarize_gamma(p, &values);
        summary.row(vec![p.to_string(), r(est.gamma), r(est.spread), est.samples.to_string()])?;
        if est.spread > acceptance::HSC_SPREAD && worst.is_none_or(|(_, w)| est.spread > w) {
            worst = Some((p, est.spread));
        }
    }
    samples.finish()?;
    summary.finish()?;
    match worst {
        Some((p, s)) => Err(Error::Numeric(format!("HSC is not constant for p = {p}: spread {s:.3e}")).into()),
        None => Ok(()),
    }
}

fn random_d2(rng: &mut SeededRng) -> D2Point<f64> {
    loop {
        if let Ok(p) = D2Point::from_chart(complex_normal(rng), complex_normal(rng)) {
            return p;
        }
    }
}

fn random_sl2(rng: &mut SeededRng) -> Mat2<f64> {
    loop {
        let (a, b, cc) = (complex_normal(rng), complex_normal(rng), complex_normal(rng));
        if a.norm() > 0.1 {
            return [[a, b], [cc, (C64::new(1.0, 0.0) + b * cc) / a]];
        }
    }
}

/// `h_alg(ι_*∂x, ι_*∂y)` at the chart point `(x, y)`.
fn pulled_back_metric(x: C64, y: C64, tol: &Tolerances) -> CliResult<C64> {
    let one = C64::new(1.0, 0.0);
    let space = standard(1)?;
    let sigma = d2_model::iota_pairs(&[x, one], &[y, one]);
    let base = PeriodPoint::in_d_tol(space, &sigma, tol.isotropy_rel)?;
    let k = (0..4)
        .max_by(|a, b| sigma[*a].norm().total_cmp(&sigma[*b].norm()))
        .expect("four coordinates");
    let lambda = base.rep()[k] / sigma[k];
    let (dx, dy) = d2_model::iota_chart_derivatives(x, y);
    let scaled = |d: [C64; 4]| d.iter().map(|z| lambda * z).collect::<Vec<_>>();
    let tx = TangentRep::new(&base, &scaled(dx))?;
    let ty = TangentRep::new(&base, &scaled(dy))?;
    Ok(pd::gs_metric(&tx, &ty)?)
}

fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.into()
}

pub fn d2(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.config.d2;
    let mut rng = ctx.rng();
    let mut points: Vec<D2Point<f64>> = cfg.points.iter().map(|p| p.build()).collect::<Result<_, _>>()?;
    for _ in 0..cfg.random {
        points.push(random_d2(&mut rng));
    }
    let mut t = ctx.table(
        "d2.csv",
        &[
            "point_index",
            "x",
            "y",
            "on_boundary",
            "quadric_residual",
            "iota_round_trip",
            "tau_involution",
            "metric_xy",
            "pullback_xy",
            "metric_rel_error",
            "sl2_actions_agree",
        ],
    )?;
    for (k, p) in points.iter().enumerate() {
        let v = d2_model::iota(p);
        let scale: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let round = d2_model::iota_inverse(&v).map(|q| q.same(p, 1e-10)).unwrap_or(false);
        let boundary = d2_model::boundary_test_tol(p, ctx.tol.projective_eq);
        let (mut cx, mut cy, mut m, mut pb, mut err) = (String::new(), String::new(), String::new(), String::new(), String::new());
        if let Some((x, y)) = p.chart() {
            cx = c(x);
            cy = c(y);
            if !boundary {
                if let Ok(mm) = d2_model::metric_matrix(x, y) {
                    let via = pulled_back_metric(x, y, &ctx.tol)?;
                    m = c(mm[0][1]);
                    pb = c(via);
                    err = r((via - mm[0][1]).norm() / mm[0][1].norm());
                }
            }
        }
        let g = random_sl2(&mut rng);
        let agree = match (d2_model::sl2_action(&g, p), d2_model::sl2_action_hmatrix(&g, p)) {
            (Ok(a), Ok(b)) => a.same(&b, 1e-9),
            _ => false,
        };
        t.row(vec![
            k.to_string(),
            cx,
            cy,
            flag(boundary),
            r(d2_model::model_quadric(&v).norm() / scale),
            flag(round),
            flag(d2_model::tau(&d2_model::tau(p)).same(p, 1e-12)),
            m,
            pb,
            err,
            flag(agree),
        ])?;
    }
    t.finish()
}

fn chain_rows(t: &mut Table, label: &str, chain: &DiskChain) -> CliResult<()> {
    for row in chain.rows() {
        t.row(vec![
            label.into(),
            row.link_index.to_string(),
            row.n.to_string(),
            c(row.a),
            c(row.b),
            r(row.delta),
            r(row.cumulative_length),
            r(row.endpoint_residual),
            r(row.min_positivity),
        ])?;
    }
    Ok(())
}

pub fn chain(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.config.chain;
    let mut rng = ctx.rng();
    let alpha = io::complex(cfg.alpha);
    let beta = io::complex(cfg.beta);
    let series = disk_chains::kobayashi_upper_bound_series(alpha, beta, &cfg.schedule)?;
    let mut t = ctx.table("series.csv", &["n", "length", "s_abs", "t_minus_one"])?;
    for row in &series {
        t.row(vec![row.n.to_string(), r(row.length), r(row.s_abs), r(row.t_minus_one)])?;
    }
    t.finish()?;

    let mut chains: Vec<(String, String, usize, DiskChain)> = Vec::new();
    for &n in &cfg.schedule {
        let chain = disk_chains::lemma57_chain(alpha, beta, n)?;
        chain.verify(ctx.tol.link_residual)?;
        chains.push((format!("two_disk:{n}"), "two_disk".into(), 1, chain));
    }
    let mut pairs = cfg.pairs.clone();
    for _ in 0..cfg.random_d2 {
        let from = io::D2PointSpec::from_point(&random_d2(&mut rng));
        let to = io::D2PointSpec::from_point(&random_d2(&mut rng));
        pairs.push(PairSpec::D2 { from, to });
    }
    for &p in &cfg.random_d_p {
        let space = standard(p)?;
        for _ in 0..cfg.random_d {
            let a = pd::random_point_in_d(&space, &mut rng)?;
            let b = pd::random_point_in_d(&space, &mut rng)?;
            pairs.push(PairSpec::D {
                p,
                from: io::pairs(a.rep()),
                to: io::pairs(b.rep()),
            });
        }
    }
    for (k, pair) in pairs.iter().enumerate() {
        let (kind, p, chain) = match pair {
            PairSpec::D2 { from, to } => ("d2", 1, disk_chains::connect_d2(&from.build()?, &to.build()?, cfg.target, &mut rng)?),
            PairSpec::D { p, from, to } => {
                let space = standard(*p)?;
                let a = PeriodPoint::in_d_tol(space.clone(), &vector(&space, from)?, ctx.tol.isotropy_rel)?;
                let b = PeriodPoint::in_d_tol(space.clone(), &vector(&space, to)?, ctx.tol.isotropy_rel)?;
                ("d", *p, disk_chains::connect_d(&space, &a, &b, cfg.target, &mut rng)?)
            }
        };
        chain.verify(ctx.tol.link_residual)?;
        if chain.length() > cfg.target {
            return Err(Error::Numeric(format!("pair {k}: length {} exceeds the target", chain.length())).into());
        }
        chains.push((format!("pair:{k}"), kind.into(), p, chain));
    }

    let mut links = ctx.table(
        "chain_links.csv",
        &["chain", "link_index", "n", "a", "b", "delta", "cumulative_length", "endpoint_residual", "min_positivity"],
    )?;
    let mut summary = ctx.table(
        "chains.csv",
        &["chain", "kind", "p", "links", "length", "max_endpoint_residual", "min_positivity"],
    )?;
    for (label, kind, p, chain) in &chains {
        chain_rows(&mut links, label, chain)?;
        summary.row(vec![
            label.clone(),
            kind.clone(),
            p.to_string(),
            chain.links.len().to_string(),
            r(chain.length()),
            r(chain.max_endpoint_residual()),
            r(chain.min_positivity()),
        ])?;
    }
    links.finish()?;
    summary.finish()
}

pub fn twistor_chain(ctx: &Context) -> CliResult<()> {
    let space = ctx.space()?;
    let cfg = &ctx.config.twistor_chain;
    let mut rng = ctx.rng();
    let mut pairs = Vec::new();
    for [a, b] in &cfg.pairs {
        let a = PeriodPoint::in_d_tol(space.clone(), &vector(&space, a)?, ctx.tol.isotropy_rel)?;
        let b = PeriodPoint::in_d_tol(space.clone(), &vector(&space, b)?, ctx.tol.isotropy_rel)?;
        pairs.push((a, b));
    }
    for _ in 0..cfg.random {
        let a = pd::random_point_in_d(&space, &mut rng)?;
        let b = pd::random_point_in_d(&space, &mut rng)?;
        pairs.push((a, b));
    }
    let mut t = ctx.table(
        "twistor_chain.csv",
        &["pair_index", "step_index", "start_residual", "end_residual", "distance_to_target"],
    )?;
    for (k, (a, b)) in pairs.iter().enumerate() {
        let steps = disk_chains::twistor_chain(&space, a, b, &mut rng)?;
        disk_chains::verify_twistor_chain(a, &steps, 1e-9)?;
        let mut prev = a.clone();
        for (j, s) in steps.iter().enumerate() {
            t.row(vec![
                k.to_string(),
                j.to_string(),
                r(s.line.residual(prev.rep())),
                r(s.line.residual(s.point.rep())),
                r(linalg::projective_distance(s.point.rep(), b.rep())),
            ])?;
            prev = s.point.clone();
        }
    }
    t.finish()
}

fn build_curve(choice: &CurveChoice) -> CliResult<(Arc<Space>, PolynomialCurve)> {
    Ok(match choice {
        CurveChoice::FLambda { lambda } => (standard(1)?, disk_chains::f_lambda(io::complex(*lambda))?.to_model()),
        CurveChoice::FLambdaPower { lambda, power } => (
            standard(1)?,
            disk_chains::f_lambda(io::complex(*lambda))?.to_model().compose_power(*power),
        ),
        CurveChoice::NegativeLine => {
            let e = |i| linalg::cunit_vector(5, i);
            let v = linalg::axpy(&e(1), C64::new(0.5, 0.0), &e(3));
            (standard(2)?, PolynomialCurve::line(&e(0), &v)?)
        }
        CurveChoice::TwistorConic { p } => {
            let space = standard(*p)?;
            let w: Vec<Vec<f64>> = (0..3).map(|i| linalg::unit_vector(3 + p, i)).collect();
            let curve = pd::TwistorLine::new(space.clone(), &w)?.parametrize();
            (space, curve)
        }
        CurveChoice::Explicit { p, components } => {
            let space = standard(*p)?;
            let curve = CurveSpec {
                components: components.clone(),
            }
            .build()?;
            space.check_len(curve.dim())?;
            (space, curve)
        }
    })
}

fn constants_path(ctx: &Context) -> PathBuf {
    ctx.out.join("constants.json")
}

/// Reads the constants cache, or recalibrates when asked to. The cache must
/// hold `γ` for every `p` in `needed`.
fn constants(ctx: &Context, needed: &BTreeSet<usize>) -> CliResult<Constants> {
    if ctx.recalibrate {
        let mut cfg = ctx.config.calibrate.clone();
        let mut ps: BTreeSet<usize> = cfg.p_values.iter().copied().collect();
        ps.extend(needed);
        cfg.p_values = ps.into_iter().collect();
        return calibrate_with(ctx, &cfg);
    }
    let path = constants_path(ctx);
    let text = std::fs::read_to_string(&path).map_err(|_| {
        Error::Precondition(format!(
            "no constants cache at {}; run `calibrate` first or pass --recalibrate",
            path.display()
        ))
    })?;
    let k: Constants = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid constants cache {}: {e}", path.display())))?;
    for p in needed {
        k.gamma_for(*p)?;
    }
    Ok(k)
}

/// Samples in `|z| < radius` where `f′` is positive.
fn positive_samples(space: &Space, curve: &PolynomialCurve, radius: f64, count: usize, rng: &mut SeededRng) -> CliResult<Vec<C64>> {
    let deriv = curve.derivative();
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        if tries > 100 * count {
            return Err(Error::BudgetExceeded(format!("too few positive samples within |z| < {radius}")).into());
        }
        let z = C64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * std::f64::consts::TAU);
        if nv::tangent_norm2(space, curve, &deriv, z) > 0.0 {
            out.push(z);
        }
    }
    Ok(out)
}

pub fn nevanlinna(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.config.nevanlinna;
    let curves = cfg.curves.iter().map(build_curve).collect::<CliResult<Vec<_>>>()?;
    let smt = build_curve(&cfg.smt_curve)?;
    let identity = cfg
        .identity
        .iter()
        .map(|ic| Ok((build_curve(&ic.curve)?, ic.radius)))
        .collect::<CliResult<Vec<_>>>()?;
    let needed: BTreeSet<usize> = std::iter::once(smt.0.p())
        .chain(identity.iter().map(|((s, _), _)| s.p()))
        .collect();
    let k = constants(ctx, &needed)?;
    let rule = ctx.rule();
    let mut rng = ctx.rng();

    let radii = nv::geometric_grid(cfg.r_min, cfg.r_max, cfg.radii);
    let mut t = ctx.table("characteristic.csv", &["curve", "r", "T_fs", "T_omega", "p_f", "residual"])?;
    let mut v = ctx.table("characteristic_summary.csv", &["curve", "p", "variation", "fs_nondecreasing"])?;
    for (i, (space, curve)) in curves.iter().enumerate() {
        let table = nv::verify_prop67(space, curve, &radii, &k, &rule)?;
        for row in &table.rows {
            t.row(vec![i.to_string(), r(row.r), r(row.t_fs), r(row.t_omega), r(row.p_f), r(row.residual)])?;
        }
        v.row(vec![i.to_string(), space.p().to_string(), r(table.variation()), flag(table.fs_nondecreasing())])?;
    }
    t.finish()?;
    v.finish()?;

    let rows = nv::smt_report(&smt.0, &smt.1, &cfg.smt_radii, &k, &rule)?;
    let mut t = ctx.table("smt.csv", &["r", "gamma_T_omega", "T_sigma", "log_term"])?;
    for row in &rows {
        t.row(vec![r(row.r), r(row.gamma_t_omega), r(row.t_sigma), r(row.log_term)])?;
    }
    t.finish()?;

    let mut t = ctx.table("identity.csv", &["curve", "sample_index", "z", "residual"])?;
    let mut s = ctx.table(
        "identity_summary.csv",
        &["curve", "p", "gamma", "samples", "excluded", "max_residual", "max_residual_at_0.9_gamma"],
    )?;
    for (i, ((space, curve), radius)) in identity.iter().enumerate() {
        let gamma = k.gamma_for(space.p())?;
        let samples = positive_samples(space, curve, *radius, cfg.identity_samples, &mut rng)?;
        let guard = 1e-3;
        let check = nv::theorem615_identity_check(space, curve, &samples, gamma, guard)?;
        let off = nv::theorem615_identity_check(space, curve, &samples, 0.9 * gamma, guard)?;
        let kept = samples.iter().filter(|z| {
            !nv::ramification_points(curve)
                .map(|ram| ram.iter().any(|x| (**z - x).norm() < guard))
                .unwrap_or(false)
        });
        for (j, (z, res)) in kept.zip(&check.residuals).enumerate() {
            t.row(vec![i.to_string(), j.to_string(), c(*z), r(*res)])?;
        }
        s.row(vec![
            i.to_string(),
            space.p().to_string(),
            r(gamma),
            check.residuals.len().to_string(),
            check.excluded.to_string(),
            r(check.max_residual),
            r(off.max_residual),
        ])?;
    }
    t.finish()?;
    s.finish()
}

/// `e₁ ∧ (cosh u e₂ + sinh u e₅)` with `u = 2 max(t − ½, 0)`: the wall `e₅`
/// stops being of type (1,1) halfway along.
fn default_transport() -> CliResult<(Arc<Space>, WallSet, Vec<PeriodPoint>, Vec<f64>)> {
    let space = standard(2)?;
    let walls = WallSet::new(&space, vec![linalg::unit_vector(5, 3), linalg::unit_vector(5, 4)])?;
    let steps = 100;
    let path = (0..=steps)
        .map(|k| {
            let u = (k as f64 / steps as f64 - 0.5).max(0.0) * 2.0;
            let mut e2 = linalg::unit_vector(5, 1);
            e2[1] = u.cosh();
            e2[4] = u.sinh();
            pd::from_positive_2plane(space.clone(), &linalg::unit_vector(5, 0), &e2)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((space, walls, path, vec![0.0, 0.0, 1.0, 0.3, -0.4]))
}

pub fn transport(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.config.transport;
    let (_space, walls, path, kappa) = match (&cfg.space, &cfg.walls, &cfg.path) {
        (None, None, None) => default_transport()?,
        (Some(spec), Some(walls), Some(planes)) => {
            let space = Arc::new(spec.build()?);
            let walls = walls.build(&space)?;
            let path = planes
                .iter()
                .map(|[a, b]| pd::from_positive_2plane(space.clone(), a, b))
                .collect::<Result<Vec<_>, _>>()?;
            let kappa = cfg
                .kappa
                .clone()
                .ok_or_else(|| CliError::Config("transport needs `kappa` with an explicit path".into()))?;
            (space, walls, path, kappa)
        }
        _ => return Err(CliError::Config("transport needs `space`, `walls` and `path` together".into())),
    };
    if path.is_empty() {
        return Err(CliError::Config("transport path is empty".into()));
    }
    let mut options = TransportOptions::default();
    if let Some(j) = cfg.max_jump {
        options.max_jump = j;
    }
    let initial = match &cfg.initial {
        Some(signs) => signs.clone(),
        None => lt::chamber_signs(&path[0], &kappa, &walls, options.tol)?,
    };
    let mut rng = ctx.rng();
    let out = lt::transport_chamber_from(&path, &walls, &initial, Some(&kappa), options, &mut rng)?;

    let mut log = ctx.table("transport_log.csv", &["sample_index", "wall_index", "event"])?;
    for e in &out.log {
        log.row(vec![e.sample_index.to_string(), e.wall_index.to_string(), e.event.to_string()])?;
    }
    log.finish()?;
    let mut signs = ctx.table("transport_signs.csv", &["sample_index", "wall_index", "sign"])?;
    let mut samples = ctx.table("transport_samples.csv", &["sample_index", "active_walls", "margin"])?;
    for (k, (pt, w)) in path.iter().zip(&out.witnesses).enumerate() {
        let s = lt::chamber_signs(pt, w, &walls, options.tol)?;
        for (i, sign) in &s {
            signs.row(vec![k.to_string(), i.to_string(), sign.to_string()])?;
        }
        samples.row(vec![k.to_string(), s.len().to_string(), r(out.margins[k])])?;
    }
    signs.finish()?;
    samples.finish()
}

/// κ_geom over `p_values`, κ_jensen from it, and γ per `p`.
fn calibrate_with(ctx: &Context, cfg: &crate::config::CalibrateConfig) -> CliResult<Constants> {
    if cfg.p_values.is_empty() {
        return Err(CliError::Config("calibrate needs at least one p".into()));
    }
    let mut rng = ctx.rng();
    let mut t = ctx.table("calibration.csv", &["constant", "p", "value", "spread", "samples"])?;
    let mut all = Vec::new();
    for &p in &cfg.p_values {
        let cal = pd::curvature_factor_calibrate(&standard(p)?, cfg.kappa_samples, &mut rng)?;
        t.row(vec!["kappa_geom".into(), p.to_string(), r(cal.kappa), r(cal.spread), cal.ratios.len().to_string()])?;
        all.extend(cal.ratios);
    }
    let kappa_geom = all.iter().sum::<f64>() / all.len() as f64;
    let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / kappa_geom.abs();
    t.row(vec!["kappa_geom".into(), "all".into(), r(kappa_geom), r(spread), all.len().to_string()])?;
    if spread > CALIBRATION_SPREAD {
        return Err(Error::Numeric(format!("κ_geom differs across p: spread {spread:.3e}")).into());
    }
    let jensen = nv::calibrate_kappa_jensen(kappa_geom, &cfg.jensen_radii)?;
    t.row(vec![
        "kappa_jensen".into(),
        String::new(),
        r(jensen.kappa_jensen),
        r(jensen.spread),
        jensen.ratios.len().to_string(),
    ])?;
    let mut gamma = std::collections::BTreeMap::new();
    for &p in &cfg.p_values {
        let est = nv::calibrate_gamma(&standard(p)?, cfg.gamma_points, cfg.gamma_directions, &mut rng)?;
        t.row(vec!["gamma".into(), p.to_string(), r(est.gamma), r(est.spread), est.samples.to_string()])?;
        if est.spread > CALIBRATION_SPREAD {
            return Err(Error::Numeric(format!("γ is not constant for p = {p}: spread {:.3e}", est.spread)).into());
        }
        gamma.insert(p, est.gamma);
    }
    t.finish()?;
    let k = Constants {
        kappa_geom,
        kappa_jensen: jensen.kappa_jensen,
        gamma,
    };
    let text = serde_json::to_string_pretty(&k).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(constants_path(ctx), text + "\n")?;
    Ok(k)
}

pub fn calibrate(ctx: &Context) -> CliResult<Constants> {
    calibrate_with(ctx, &ctx.config.calibrate)
}
