//! Verification suites, report rendering, and JSON file I/O for the `verify` CLI.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::hk_curvature::{
    contraction_identity_1, contraction_identity_2, hk_from_endo, kappa, kappa_inv, lie_derivative, t_k, t_k_frame,
    t_k_mixed, tangent_h, HKTensor, SymQuartic,
};
use crate::irrep_so4::{
    adapted_basis_form, carrier_sp2, carrier_torsion, carrier_v, casimir_decompose, classical_discriminant,
    frame_residuals, is_sp1ir_invariant, kahler_forms, proj_sp1ir, projection_residuals, reducible_case_checks, s_hat,
    s_hat_from_upsilon, script_e_frames, substitution_residual, IrrepFrame, Sp1Generators, Summand,
};
use crate::model_spaces::{
    bianchi_family_solve, compact, compact_to_split_scaling, curvature_data, curvature_identity_residual,
    flat_translation_residual, h_family, h_family_flipped_sign, identification_residual, model_frame_checks,
    phi1_action_residual, r0, scalar_curvature, sp1_table_residuals, split, CoframeSystem, LieTable, ModelSpace, PSI,
    PHI, THETA,
};
use crate::orbit::{
    cayley_sp2, conjugate_frames, is_cd_coordinates, is_cd_middle, is_cd_theorem, k_from_frames, orbit_dimension,
    orbit_dimension_extended, projection_form_residuals, seven_halves_eigenspace, stabilizer_algebra,
    stabilizer_is_upsilon_span, transport, transport_hk, MembershipReport,
};
use crate::sp2_lie::{dagger, dollar_basis, killing, real_basis, EndoOnSp2, Sp2Element};
use crate::tensor_core::StructureTensors;
use crate::{Error, Exact, Float, Residual, Result, Scalar};

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 6] = ["preliminaries", "irrep", "orbit", "models", "bianchi", "all"];

/// Default tolerance for the float backend.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Number of random samples in sampled checks.
pub const SAMPLES: usize = 20;

/// Scalar backend of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            other => Err(Error::Parse(format!("unknown backend {other:?} (expected exact or float)"))),
        }
    }
}

/// One named check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<Residual>,
    /// The check passes when the residual does not vanish.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub expect_nonzero: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

/// Outcome of a suite run.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub backend: Backend,
    pub seed: u64,
    pub tol: Option<f64>,
    pub version: String,
    pub passed: bool,
    pub max_relative_residual: f64,
    pub checks: Vec<Check>,
    /// Wall time in seconds; the only field that varies between identical runs.
    pub timing: f64,
}

impl SuiteResult {
    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let status = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "# verify {} ({}): {status}\n", self.suite, serde_json::to_value(self.backend).unwrap().as_str().unwrap());
        let _ = writeln!(s, "- version: {}", self.version);
        let _ = writeln!(s, "- seed: {}", self.seed);
        if let Some(t) = self.tol {
            let _ = writeln!(s, "- tolerance: {t:e}");
        }
        let _ = writeln!(s, "- checks: {} ({} failed)", self.checks.len(), self.failed_checks().len());
        let _ = writeln!(s, "- max relative residual: {:.3e}", self.max_relative_residual);
        let _ = writeln!(s, "- wall time: {:.2} s\n", self.timing);
        let _ = writeln!(s, "| check | status | residual |");
        let _ = writeln!(s, "|---|---|---|");
        for c in &self.checks {
            let mut r = c.residual.as_ref().map(|r| r.to_string()).unwrap_or_else(|| "-".into());
            if c.expect_nonzero {
                r.push_str(" (expected nonzero)");
            }
            let _ = writeln!(s, "| {} | {} | {} |", c.name, if c.passed { "pass" } else { "FAIL" }, r);
        }
        s
    }
}

/// Collects checks with a common name prefix.
struct Collector {
    prefix: &'static str,
    tol: f64,
    checks: Vec<Check>,
}

impl Collector {
    fn new(prefix: &'static str, tol: f64) -> Self {
        Collector { prefix, tol, checks: Vec::new() }
    }

    fn push(&mut self, name: &str, passed: bool, residual: Option<Residual>, detail: Option<Value>) {
        self.checks.push(Check { name: format!("{}.{name}", self.prefix), passed, residual, expect_nonzero: false, detail });
    }

    fn residual(&mut self, name: &str, r: Residual) {
        let ok = r.passes(self.tol);
        self.push(name, ok, Some(r), None);
    }

    fn residuals(&mut self, prefix: &str, rs: impl IntoIterator<Item = (&'static str, Residual)>) {
        for (n, r) in rs {
            self.residual(&format!("{prefix}{n}"), r);
        }
    }

    fn expect_fail(&mut self, name: &str, r: Residual) {
        let ok = !r.passes(self.tol);
        self.push(name, ok, Some(r), None);
        if let Some(c) = self.checks.last_mut() {
            c.expect_nonzero = true;
        }
    }

    fn flag(&mut self, name: &str, ok: bool, detail: Value) {
        self.push(name, ok, None, Some(detail));
    }

    fn error(&mut self, name: &str, e: Error) {
        self.push(name, false, None, Some(json!({ "error": e.to_string() })));
    }
}

fn sc<S: Scalar>(x: &S) -> Value {
    json!(x.to_string())
}

fn summands_json(s: &[Summand]) -> Value {
    json!(s.iter().map(|x| json!({"k": x.k, "l": x.l, "multiplicity": x.multiplicity, "dim": x.dim()})).collect::<Vec<_>>())
}

fn membership_residuals(c: &mut Collector, prefix: &str, m: &MembershipReport) {
    for (n, r) in [
        ("condition_i", &m.condition_i),
        ("condition_ii", &m.condition_ii),
        ("coord_i", &m.coord_i),
        ("coord_ii", &m.coord_ii),
        ("middle_form", &m.middle_form),
    ] {
        if let Some(r) = r {
            c.residual(&format!("{prefix}{n}"), r.clone());
        }
    }
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

fn preliminaries<S: Scalar>(tol: f64, seed: u64) -> Vec<Check> {
    let mut c = Collector::new("preliminaries", tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one_i_sqrt3 = S::i().times(&S::sqrt3());
    let prod = S::one().plus(&one_i_sqrt3).times(&S::one().minus(&one_i_sqrt3));
    c.residual("scalar_conjugate_product", Residual::between([&prod], [&S::from_i64(4)]));
    c.residuals("structure.", StructureTensors::<S>::standard().identity_residuals());

    let basis = dollar_basis::<S>();
    let mut jac = Vec::new();
    let mut kill = Vec::new();
    for (i, x) in basis.iter().enumerate() {
        for (j, y) in basis.iter().enumerate() {
            kill.push(Residual::between([&killing(x, y)], [&x.inner(y).scale_i64(-6)]));
            for z in &basis[j.max(i)..] {
                let v = x.bracket(y).bracket(z).add(&y.bracket(z).bracket(x)).add(&z.bracket(x).bracket(y));
                jac.push(Residual::of_zero(v.matrix().entries()));
            }
        }
    }
    c.residual("sp2.jacobi", Residual::merge(jac));
    c.residual("sp2.killing_is_minus_six_inner", Residual::merge(kill));

    let id = EndoOnSp2::<S>::identity();
    c.residual("dagger.identity", Residual::between(dagger(&id).matrix().entries(), id.scale(&S::from_i64(-6)).matrix().entries()));
    let p = proj_sp1ir::<S>();
    let expected = p.scale(&S::from_i64(2)).sub(&id.scale(&S::ratio(12, 5)));
    c.residual("dagger.projection", Residual::between(dagger(&p).matrix().entries(), expected.matrix().entries()));

    let t = t_k(&kappa(&s_hat::<S>()));
    let m7 = t.eigen_multiplicity(&S::ratio(7, 2));
    let m3 = t.eigen_multiplicity(&S::ratio(-3, 2));
    c.flag("t_k_s_hat.eigenvalues", m7 == 3 && m3 == 7, json!({"7/2": m7, "-3/2": m3}));
    c.residual("t_k_s_hat.trace", Residual::of_zero([&t.trace()]));

    let mut l_from_k = Vec::new();
    let mut k_from_l = Vec::new();
    let mut round = Vec::new();
    let mut forms = Vec::new();
    let mut invariants = Vec::new();
    for _ in 0..SAMPLES {
        let s = SymQuartic::<S>::random(&mut rng, 3);
        let k = kappa(&s);
        invariants.extend(k.invariant_residuals().into_iter().map(|(_, r)| r));
        match kappa_inv(&k) {
            Ok(back) => round.push(back.array().residual_to(s.array())),
            Err(e) => return fail(c, "kappa.round_trip", e),
        }
        let l = t_k(&k);
        l_from_k.push(Residual::between(dagger(&l).matrix().entries(), l.scale(&S::from_i64(2)).matrix().entries()));
        match hk_from_endo(&l, tol.max(DEFAULT_TOL)) {
            Ok(k2) => k_from_l.push(k2.mixed().residual_to(k.mixed())),
            Err(e) => return fail(c, "dagger.k_from_l", e),
        }
        match (t_k_frame(&k), t_k_mixed(&k)) {
            (Ok(a), Ok(b)) => {
                forms.push(Residual::between(a.matrix().entries(), l.matrix().entries()));
                forms.push(Residual::between(b.matrix().entries(), l.matrix().entries()));
            }
            (Err(e), _) | (_, Err(e)) => return fail(c, "t_k.three_forms", e),
        }
    }
    c.residual("kappa.invariants", Residual::merge(invariants));
    c.residual("kappa.round_trip", Residual::merge(round));
    c.residual("dagger.l_from_k", Residual::merge(l_from_k));
    c.residual("dagger.k_from_l", Residual::merge(k_from_l));
    c.residual("t_k.three_forms", Residual::merge(forms));
    c.checks
}

fn fail(mut c: Collector, name: &str, e: Error) -> Vec<Check> {
    c.error(name, e);
    c.checks
}

fn irrep<S: Scalar>(tol: f64, _seed: u64) -> Vec<Check> {
    let mut c = Collector::new("irrep", tol);
    c.residual("delta_generators_bracket", Sp1Generators::<S>::standard().bracket_residual());
    let frame = IrrepFrame::<S>::standard();
    c.residuals("", frame.identity_residuals());
    c.residual("s_hat_from_upsilon", s_hat_from_upsilon(&frame.upsilon).array().residual_to(s_hat::<S>().array()));
    c.flag("s_hat_sp1ir_invariant", is_sp1ir_invariant(&s_hat::<S>(), tol.max(DEFAULT_TOL)), json!(null));

    c.residual("discriminant.substitution", substitution_residual::<S>());
    let n = |k: i64| S::from_i64(k);
    let repeated = classical_discriminant(&n(1), &n(0), &n(-3), &n(2));
    c.residual("discriminant.repeated_root", Residual::of_zero([&repeated]));
    let distinct = classical_discriminant(&n(1), &n(0), &n(-1), &n(0));
    c.flag("discriminant.distinct_roots_nonzero", !distinct.negligible(1.0), json!({"value": sc(&distinct)}));

    c.residuals("projection.", projection_residuals::<S>());
    match reducible_case_checks::<S>() {
        Ok(r) => {
            c.residual("reducible.generators_close", r.generators_close);
            c.residual("reducible.nondegenerate", r.nondegenerate);
            c.residual("reducible.trivial_factor", r.trivial_factor);
            c.expect_fail("reducible.nondegenerate_excluded", r.nondegenerate_relation);
            c.expect_fail("reducible.trivial_factor_excluded", r.trivial_factor_relation);
        }
        Err(e) => c.error("reducible", e),
    }
    let (_, constant, jres) = adapted_basis_form::<S>();
    c.residual("adapted_basis.constant", Residual::between([&constant], [&S::one()]));
    c.residual("adapted_basis.j", jres);
    c.residuals("frames.", frame_residuals(&script_e_frames::<S>()));

    let ctol = tol.max(DEFAULT_TOL);
    let expected: [(&str, Vec<(usize, usize, usize)>); 3] = [
        ("casimir.v", vec![(3, 1, 1)]),
        ("casimir.sp2", vec![(2, 0, 1), (6, 0, 1)]),
        ("casimir.torsion", vec![(3, 1, 1), (5, 1, 1), (7, 1, 1), (9, 1, 1)]),
    ];
    for (name, want) in expected {
        let module = match name {
            "casimir.v" => carrier_v::<S>(ctol),
            "casimir.sp2" => carrier_sp2::<S>(ctol),
            _ => carrier_torsion::<S>(ctol),
        };
        match module.and_then(|m| casimir_decompose(&m)) {
            Ok(s) => {
                let got: Vec<(usize, usize, usize)> = s.iter().map(|x| (x.k, x.l, x.multiplicity)).collect();
                c.flag(name, got == want, summands_json(&s));
            }
            Err(e) => c.error(name, e),
        }
    }
    c.checks
}

fn orbit<S: Scalar>(tol: f64, seed: u64) -> Vec<Check> {
    let mut c = Collector::new("orbit", tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = s_hat::<S>();
    let k = kappa(&s);
    let thm = is_cd_theorem(&k, tol);
    let coord = is_cd_coordinates(&s, tol);
    membership_residuals(&mut c, "s_hat.", &thm);
    membership_residuals(&mut c, "s_hat.", &coord);
    c.flag("s_hat.verdicts", thm.verdict && coord.verdict && is_cd_middle(&s, tol).verdict, json!(null));
    c.residuals("s_hat.", projection_form_residuals(&k));
    let q = seven_halves_eigenspace(&k);
    c.flag("s_hat.seven_halves_eigenspace_dim", q.len() == 3, json!(q.len()));

    // Exact Cayley transports, then perturbations.
    let mut transported = Vec::new();
    let mut group = Vec::new();
    let mut equivariance = Vec::new();
    for n in 0..SAMPLES {
        let x = Sp2Element::<S>::random_real(&mut rng, 2);
        let g = match cayley_sp2(&x) {
            Ok(g) => g,
            Err(e) => return fail(c, "cayley", e),
        };
        let (p, j) = g.residuals();
        group.push(p);
        group.push(j);
        let t = transport(&s, &g);
        if n < 3 {
            equivariance.push(kappa(&t).mixed().residual_to(transport_hk(&k, &g).mixed()));
        }
        transported.push(t);
    }
    c.residual("cayley.group_element", Residual::merge(group));
    c.residual("cayley.kappa_equivariant", Residual::merge(equivariance));
    let mut perturbed = Vec::new();
    while perturbed.len() < SAMPLES {
        let d = SymQuartic::<S>::random(&mut rng, 2);
        if !d.array().is_zero() {
            perturbed.push(s.add(&d));
        }
    }
    let verdicts = |q: &SymQuartic<S>| {
        let a = is_cd_theorem(&kappa(q), tol).verdict;
        let b = is_cd_coordinates(q, tol).verdict;
        let m = is_cd_middle(q, tol).verdict;
        (a, b, m)
    };
    let vt: Vec<(bool, bool, bool)> = transported.iter().map(verdicts).collect();
    let vp: Vec<(bool, bool, bool)> = perturbed.iter().map(verdicts).collect();
    let pass_t = vt.iter().filter(|v| v.0 && v.1 && v.2).count();
    let fail_p = vp.iter().filter(|v| !v.0 && !v.1 && !v.2).count();
    let agree = vt.iter().chain(&vp).filter(|v| v.0 == v.1 && v.1 == v.2).count();
    c.flag("transports_pass", pass_t == SAMPLES, json!({"passed": pass_t, "samples": SAMPLES}));
    c.flag("perturbations_fail", fail_p == SAMPLES, json!({"failed": fail_p, "samples": SAMPLES}));
    c.flag("predicates_agree", agree == 2 * SAMPLES, json!({"agree": agree, "samples": 2 * SAMPLES}));

    let stab = stabilizer_algebra(&s);
    c.flag("stabilizer.dimension", stab.len() == 3, json!(stab.len()));
    c.flag("stabilizer.upsilon_span", stabilizer_is_upsilon_span(&stab), json!(null));
    let od = orbit_dimension(&s);
    let ode = orbit_dimension_extended(&s);
    c.flag("orbit_dimension.sp2", od == 7, json!(od));
    c.flag("orbit_dimension.sp2_sp1", ode == 7, json!(ode));
    let generic = stabilizer_algebra(&SymQuartic::<S>::random(&mut rng, 3)).len();
    c.flag("stabilizer.generic_quartic", generic == 0, json!(generic));

    // Tangent operator for generators in each eigenspace of T_K.
    let full = k.full();
    let t = t_k(&k);
    let upsilon = IrrepFrame::<S>::standard().upsilon;
    let x = real_basis::<S>().into_iter().map(|b| b.scale(&S::ratio(7, 2)).sub(&t.apply(&b)).scale(&S::ratio(1, 5))).find(|u| !u.is_zero());
    let cases: Vec<(&str, Sp2Element<S>, Sp2Element<S>)> = vec![
        ("seven_halves", upsilon[0].clone(), Sp2Element::zero()),
        ("minus_three_halves", x.clone().expect("nonzero projection"), x.expect("nonzero projection")),
    ];
    let ttol = tol.max(DEFAULT_TOL);
    for (name, u, expected) in cases {
        let l = lie_derivative(&u.to_endo8(), &full);
        for (how, given) in [("given_u", Some(&u)), ("solved_u", None)] {
            match tangent_h(&k, &l, given, ttol) {
                Ok(h) => {
                    let p = format!("tangent_h.{name}.{how}.");
                    c.residual(&format!("{p}h_value"), Residual::between(h.h.matrix().entries(), expected.matrix().entries()));
                    c.residual(&format!("{p}formula"), h.formula_residual);
                    c.residual(&format!("{p}eigen"), h.eigen_residual);
                    c.residual(&format!("{p}lie"), h.lie_residual);
                }
                Err(e) => c.error(&format!("tangent_h.{name}.{how}"), e),
            }
        }
    }
    match tangent_h(&k, &HKTensor::<S>::zero().full(), None, ttol) {
        Ok(h) => c.residual("tangent_h.zero", Residual::of_zero(h.h.matrix().entries())),
        Err(e) => c.error("tangent_h.zero", e),
    }
    c.residual("contraction_identity_1", contraction_identity_1(&k));
    c.residual("contraction_identity_2", contraction_identity_2(&k));

    // Frames.
    let e = script_e_frames::<S>();
    let w = kahler_forms::<S>();
    match k_from_frames(&e, &w, tol) {
        Ok(r) => {
            c.flag("frames.verdict", r.verdict, json!(null));
            c.residual("frames.bracket", r.bracket);
            c.residual("frames.four_form", r.four_form);
            c.residual("frames.k_is_kappa_s_hat", r.full.residual_to(&full));
        }
        Err(e) => c.error("frames", e),
    }
    let doubled = e.clone().map(|m| m.scale(&S::from_i64(2)));
    match k_from_frames(&doubled, &w, tol) {
        Ok(r) => c.flag("frames.doubled_rejected", !r.verdict, json!(null)),
        Err(e) => c.error("frames.doubled_rejected", e),
    }
    let g = cayley_sp2(&Sp2Element::<S>::random_real(&mut rng, 2)).and_then(|g| Ok((conjugate_frames(&e, &g)?, g)));
    match g.and_then(|(ce, g)| Ok((k_from_frames(&ce, &w, tol)?, g))) {
        Ok((r, g)) => {
            c.flag("frames.conjugated_verdict", r.verdict, json!(null));
            c.residual("frames.conjugated_is_transport", r.full.residual_to(&transport_hk(&k, &g).full()));
        }
        Err(e) => c.error("frames.conjugated", e),
    }
    c.checks
}

fn models<S: Scalar>(tol: f64, _seed: u64) -> Vec<Check> {
    let mut c = Collector::new("models", tol);
    for m in [ModelSpace::Compact, ModelSpace::Split, ModelSpace::Flat] {
        c.residual(&format!("{}.is_h_family", m.name()), identification_residual::<S>(m));
    }
    match compact::<S>().rescale(&compact_to_split_scaling()) {
        Ok(r) => c.residual("split.is_rescaled_compact", r.coefficients().residual_to(split::<S>().coefficients())),
        Err(e) => c.error("split.is_rescaled_compact", e),
    }
    c.residual("flat.translations_commute", flat_translation_residual::<S>());
    for (name, h) in [("h_-3/2", S::ratio(-3, 2)), ("h_0", S::zero()), ("h_3/2", S::ratio(3, 2)), ("h_1", S::one())] {
        let cs = h_family(&h);
        c.residual(&format!("closure.{name}"), Residual::merge(cs.d_squared_check().into_iter().map(|(_, r)| r)));
        c.residual(&format!("reality.{name}"), cs.reality_residual());
    }
    let flipped = h_family_flipped_sign(&S::ratio(3, 2));
    c.expect_fail("closure.flipped_phi1_sign_fails", Residual::merge(flipped.d_squared_check().into_iter().map(|(_, r)| r)));
    let mut bad = compact::<S>();
    bad.add_term(PSI[0], PSI[1], PSI[2], &S::one());
    c.expect_fail("closure.perturbed_fails", Residual::merge(bad.d_squared_check().into_iter().map(|(_, r)| r)));
    c.flag("jacobi.perturbed_fails", LieTable::from_coframe(&bad).jacobi_check(tol).is_err(), json!(null));

    for (space, sign) in [(ModelSpace::Compact, -1i64), (ModelSpace::Split, 1)] {
        let n = space.name();
        let cs: CoframeSystem<S> = space.coframe();
        let table = LieTable::from_coframe(&cs);
        match table.jacobi_check(tol) {
            Ok(r) => c.residual(&format!("{n}.jacobi"), r),
            Err(e) => c.error(&format!("{n}.jacobi"), e),
        }
        c.residuals(&format!("{n}."), sp1_table_residuals(&table));
        c.residual(&format!("{n}.phi1_action"), phi1_action_residual(&table));
        match curvature_data(&cs, tol) {
            Ok(d) => {
                c.residual(&format!("{n}.curvature_identity"), curvature_identity_residual(&d, sign));
                let expected = s_hat::<S>().scale_real(&S::from_i64(sign));
                c.residual(&format!("{n}.r_prime_quartic"), d.r_prime_quartic.array().residual_to(expected.array()));
                c.residual(&format!("{n}.r_prime_ricci_traceless"), d.r_prime_ricci.clone());
                c.residual(&format!("{n}.einstein"), d.einstein.clone());
                c.residual(&format!("{n}.c_pattern"), d.c_pattern.clone());
                c.residual(&format!("{n}.reconstruction"), d.reconstruction.clone());
                c.flag(
                    &format!("{n}.scalar_curvature"),
                    true,
                    json!({
                        "ricci_trace": sc(&d.scal_ricci),
                        "from_r0_coefficient": sc(&d.scal_from_r0),
                        "from_c": sc(&d.scal_from_c),
                        "r0_coefficient": sc(&d.r0_coefficient),
                        "c": sc(&d.c),
                    }),
                );
            }
            Err(e) => c.error(&format!("{n}.curvature"), e),
        }
        match model_frame_checks(&table, tol) {
            Ok((re, rj, rep)) => {
                c.residual(&format!("{n}.frames_are_script_e"), re);
                c.residual(&format!("{n}.phi_gives_j"), rj);
                c.residual(&format!("{n}.eps_wedge_eps"), rep.four_form);
                c.flag(&format!("{n}.frames_give_cubic_discriminant"), rep.verdict, json!(null));
            }
            Err(e) => c.error(&format!("{n}.frames"), e),
        }
    }
    let s0 = scalar_curvature(&r0::<S>());
    c.residual("r0_scalar_curvature_32", Residual::between([&s0], [&S::from_i64(32)]));
    c.checks
}

fn bianchi<S: Scalar>(tol: f64, _seed: u64) -> Vec<Check> {
    let mut c = Collector::new("bianchi", tol);
    match bianchi_family_solve::<S>() {
        Ok(sol) => {
            c.flag(
                "nullity",
                sol.nullity == 1,
                json!({"nullity": sol.nullity, "unknowns": sol.unknowns, "equations": sol.equations}),
            );
            c.residuals("", sol.checks.clone());
            let f13 = sol.table.coefficient(PHI[1], THETA[0], THETA[2]);
            c.residual("f2_13_is_one", Residual::between([f13], [&S::one()]));
        }
        Err(e) => c.error("nullity", e),
    }
    c.checks
}

type SuiteFn = fn(f64, u64) -> Vec<Check>;

fn suite_fns<S: Scalar>(name: &str) -> Result<Vec<SuiteFn>> {
    Ok(match name {
        "preliminaries" => vec![preliminaries::<S>],
        "irrep" => vec![irrep::<S>],
        "orbit" => vec![orbit::<S>],
        "models" => vec![models::<S>],
        "bianchi" => vec![bianchi::<S>],
        "all" => vec![preliminaries::<S>, irrep::<S>, orbit::<S>, models::<S>, bianchi::<S>],
        other => return Err(Error::UnknownSuite(other.to_string())),
    })
}

fn run_checks<S: Scalar>(name: &str, tol: f64, seed: u64) -> Result<Vec<Check>> {
    let fns = suite_fns::<S>(name)?;
    let mut checks: Vec<Check> = std::thread::scope(|scope| {
        let handles: Vec<_> = fns.iter().map(|f| scope.spawn(move || f(tol, seed))).collect();
        handles.into_iter().flat_map(|h| h.join().expect("suite thread")).collect()
    });
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(checks)
}

/// Runs a named suite. `tol` is required for the float backend and rejected for the exact one.
pub fn run_suite(name: &str, backend: Backend, seed: u64, tol: Option<f64>) -> Result<SuiteResult> {
    let start = Instant::now();
    let checks = match (backend, tol) {
        (Backend::Exact, None) => run_checks::<Exact>(name, 0.0, seed)?,
        (Backend::Float, Some(t)) if t > 0.0 && t.is_finite() => run_checks::<Float>(name, t, seed)?,
        (Backend::Exact, Some(_)) => return Err(Error::Precondition("the exact backend takes no tolerance".into())),
        (Backend::Float, _) => return Err(Error::Precondition("the float backend needs a positive tolerance".into())),
    };
    let passed = checks.iter().all(|c| c.passed);
    let max_relative_residual = checks.iter().filter(|c| !c.expect_nonzero).filter_map(|c| c.residual.as_ref()).map(|r| r.relative).fold(0.0, f64::max);
    Ok(SuiteResult {
        suite: name.to_string(),
        backend,
        seed,
        tol,
        version: env!("CARGO_PKG_VERSION").to_string(),
        passed,
        max_relative_residual,
        checks,
        timing: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

/// A value stored in a JSON file, tagged by "kind".
#[derive(Clone, Debug, PartialEq)]
pub enum Stored {
    Quartic(SymQuartic<Exact>),
    Curvature(HKTensor<Exact>),
    Coframe(CoframeSystem<Exact>),
}

impl Stored {
    pub fn to_json(&self) -> Value {
        let (kind, value) = match self {
            Stored::Quartic(s) => ("quartic", s.to_json()),
            Stored::Curvature(k) => ("curvature", k.to_json()),
            Stored::Coframe(c) => ("coframe", c.to_json()),
        };
        json!({ "kind": kind, "value": value })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| Error::Parse("missing \"kind\"".into()))?;
        let value = v.get("value").ok_or_else(|| Error::Parse("missing \"value\"".into()))?;
        match kind {
            "quartic" => Ok(Stored::Quartic(SymQuartic::from_json(value)?)),
            "curvature" => Ok(Stored::Curvature(HKTensor::from_json(value)?)),
            "coframe" => Ok(Stored::Coframe(CoframeSystem::from_json(value)?)),
            other => Err(Error::Parse(format!("unknown kind {other:?}"))),
        }
    }
}

pub fn save(path: &Path, value: &Stored) -> Result<()> {
    let text = serde_json::to_string_pretty(&value.to_json()).expect("value serializes");
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads a stored value; malformed JSON reports line and column.
pub fn load(path: &Path) -> Result<Stored> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
    Stored::from_json(&v)
}

/// load ∘ save is the identity on the value in `path`.
pub fn io_roundtrip(path: &Path) -> Result<bool> {
    let value = load(path)?;
    let tmp = path.with_extension("roundtrip.json");
    save(&tmp, &value)?;
    let back = load(&tmp);
    std::fs::remove_file(&tmp)?;
    Ok(back? == value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(matches!(run_suite("bogus", Backend::Exact, 7, None), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn tolerance_rules() {
        assert!(run_suite("bianchi", Backend::Exact, 7, Some(1e-9)).is_err());
        assert!(run_suite("bianchi", Backend::Float, 7, None).is_err());
    }

    #[test]
    fn bianchi_suite_passes() {
        let r = run_suite("bianchi", Backend::Exact, 7, None).unwrap();
        assert!(r.passed, "{:?}", r.failed_checks());
        let names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn stored_round_trip() {
        let dir = std::env::temp_dir().join(format!("cubic-disc-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s_hat.json");
        save(&path, &Stored::Quartic(s_hat())).unwrap();
        assert!(io_roundtrip(&path).unwrap());
        std::fs::write(&path, "{\"kind\": \"quartic\", \"value\": {").unwrap();
        assert!(matches!(load(&path), Err(Error::Parse(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
