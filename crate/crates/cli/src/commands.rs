use std::fmt::Write as _;
use std::path::Path;

use tangleproof::coords::CoordChange;
use tangleproof::dimension::{
    duarte_constants, thicknesses, verify_horseshoe, ClassFReport, ConeFieldSpec, DistortionBundle, HorseshoeCert,
    HorseshoeSpec, MarkovComponents, SupDomain, SweepOptions,
};
use tangleproof::hsets::ChainOptions;
use tangleproof::manifold::{enclose_stable_manifold, ManifoldOptions};
use tangleproof::map::{cells_cover_set, domain_csv, find_domain, DomainGrid, FixedPointCert, Iterate, MapHandle};
use tangleproof::pipeline::{
    endpoint_chain, endpoints_from_chains, fixed_point_residual, horseshoe_spec, HorseshoeSettings,
};
use tangleproof::renorm::{approx_fixed_point, scalings_of, Scalings};
use tangleproof::tables::{run_chain, ChainReport};
use tangleproof::tangle::assemble_tangle;
use tangleproof::toy::AffineHorseshoe;
use tangleproof::{Interval, PolyBall};

use crate::config::{Model, PipelineConfig};
use crate::error::CliResult;
use crate::report::ProofReport;

/// Map built from the configured generating function.
struct Universal {
    s: PolyBall,
    map: MapHandle,
    scalings: Scalings,
}

fn universal(cfg: &PipelineConfig, rep: &mut ProofReport) -> CliResult<Universal> {
    let s = match &cfg.input.genfunc {
        Some(p) => {
            let p = cfg.resolve(p);
            let text = std::fs::read_to_string(&p)?;
            rep.input("genfunc", &text);
            PolyBall::from_text(&text)?
        }
        None => approx_fixed_point(cfg.input.degree, cfg.fixed_point.max_iters)?,
    };
    let scalings = scalings_of(&s)?;
    let map = MapHandle::new(s.inflate_ball(cfg.input.inflate));
    Ok(Universal { s, map, scalings })
}

fn iv(i: Interval) -> String {
    format!("[{:.9}, {:.9}]", i.lo(), i.hi())
}

fn sweep_options(cfg: &PipelineConfig) -> SweepOptions {
    SweepOptions {
        grid: cfg.horseshoe.grid,
        max_depth: cfg.horseshoe.max_depth,
        tolerance: cfg.horseshoe.tolerance,
        domain: SupDomain::ImageMeetsComponents,
        ..SweepOptions::default()
    }
}

fn fixed_point_step(u: &Universal, rep: &mut ProofReport) -> Option<FixedPointCert> {
    match u.map.fixed_point() {
        Ok(fp) => {
            rep.value("p0_x", fp.p0.x.mid());
            rep.value("p0_u", fp.p0.u.mid());
            rep.value("eig_plus", fp.eig_plus.mid());
            rep.value("eig_minus", fp.eig_minus.mid());
            rep.step(
                "fixed point p0",
                true,
                format!(
                    "x {} u {} eigenvalues {} {}",
                    iv(fp.p0.x),
                    iv(fp.p0.u),
                    iv(fp.eig_plus),
                    iv(fp.eig_minus)
                ),
            );
            Some(fp)
        }
        Err(e) => {
            rep.step("fixed point p0", false, e.to_string());
            None
        }
    }
}

pub fn fixed_point(cfg: &PipelineConfig, out: &Path, rep: &mut ProofReport) -> CliResult<()> {
    let u = universal(cfg, rep)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("s_star.txt"), u.s.to_text())?;
    rep.value("degree", u.s.degree() as f64);
    rep.value("lambda", u.scalings.lambda.mid());
    rep.value("mu", u.scalings.mu.mid());
    rep.step(
        "scalings",
        true,
        format!("lambda {} mu {}", iv(u.scalings.lambda), iv(u.scalings.mu)),
    );
    match fixed_point_residual(&u.s) {
        Ok(r) => {
            rep.value("residual", r);
            rep.step("residual", r.is_finite(), format!("{r:e}"));
        }
        Err(e) => rep.step("residual", false, e.to_string()),
    }
    fixed_point_step(&u, rep);
    Ok(())
}

pub fn domain(cfg: &PipelineConfig, out: &Path, rep: &mut ProofReport) -> CliResult<()> {
    let d = &cfg.domain;
    let grid = DomainGrid {
        x: (d.x[0], d.x[1]),
        u: (d.u[0], d.u[1]),
        nx: d.nx,
        nu: d.nu,
        power: d.power,
        refine: d.refine,
    };
    let total = grid.nx * grid.nu;
    if total == 0 {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("domain.csv"), domain_csv(&[]))?;
        rep.step("cells", true, "empty grid");
        return Ok(());
    }
    let u = universal(cfg, rep)?;
    let cells = find_domain(&u.map, &grid);
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("domain.csv"), domain_csv(&cells))?;
    rep.value("cells", cells.len() as f64);
    rep.step("cells", !cells.is_empty(), format!("{} cells from a {total}-cell grid", cells.len()));
    for name in &d.contains {
        let (table, text) = cfg.table(name)?;
        rep.input(name, &text);
        let sets = table.resolve(Some(&u.scalings))?;
        let missing: Vec<String> = sets
            .iter()
            .enumerate()
            .filter(|(_, s)| !cells_cover_set(&cells, s))
            .map(|(i, _)| i.to_string())
            .collect();
        rep.step(
            &format!("contains {name}"),
            missing.is_empty(),
            if missing.is_empty() {
                format!("{} sets", sets.len())
            } else {
                format!("sets {} not covered", missing.join(", "))
            },
        );
    }
    Ok(())
}

fn record_chain(rep: &mut ProofReport, r: &ChainReport, csv: &mut String) {
    for l in &r.links {
        let detail = match (&l.error, l.margin) {
            (Some(e), _) => e.clone(),
            (None, Some(m)) => match l.cone_epsilon {
                Some(c) => format!("power {} margin {m:.3e} cone {c:.3e}", l.power),
                None => format!("power {} margin {m:.3e}", l.power),
            },
            _ => String::new(),
        };
        rep.step(&format!("{}: {} -> {}", r.name, l.from, l.to), l.ok, detail);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.name,
            l.from,
            l.to,
            l.power,
            l.ok,
            l.margin.map_or(String::new(), |m| format!("{m:e}")),
            l.cone_epsilon.map_or(String::new(), |m| format!("{m:e}")),
        );
    }
    for c in &r.recentered {
        rep.step(
            &format!("{}: recentre set {}", r.name, c.set),
            true,
            format!("shift ({:.3e}, {:.3e})", c.shift[0], c.shift[1]),
        );
    }
    if let Some(first) = r.links.iter().find(|l| !l.ok) {
        rep.step(
            &format!("{}: chain", r.name),
            false,
            format!("first failing link {} -> {}", first.from, first.to),
        );
    }
}

pub fn verify(cfg: &PipelineConfig, out: &Path, rep: &mut ProofReport) -> CliResult<()> {
    let u = universal(cfg, rep)?;
    let mut csv = String::from("table,from,to,power,ok,margin,cone_epsilon\n");
    for name in &cfg.verify.tables {
        let (table, text) = cfg.table(name)?;
        rep.input(name, &text);
        let sets = table.resolve(Some(&u.scalings))?;
        let opts = table.chain_options(&ChainOptions::default())?;
        let r = run_chain(&table.name, &u.map, &sets, &table.chain_links(), &opts, cfg.verify.max_shift);
        record_chain(rep, &r, &mut csv);
    }
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("links.csv"), csv)?;
    Ok(())
}

fn settings(cfg: &PipelineConfig) -> HorseshoeSettings {
    HorseshoeSettings {
        sweep: sweep_options(cfg),
        slope_splits: cfg.horseshoe.slope_splits,
        ..HorseshoeSettings::default()
    }
}

fn horseshoe_step(rep: &mut ProofReport, r: tangleproof::Result<HorseshoeCert>) -> Option<HorseshoeCert> {
    match r {
        Ok(c) => {
            rep.value("a_minus", c.a_minus);
            rep.value("a_plus", c.a_plus);
            rep.value("cone_margin", c.cone_margin);
            rep.value("min_angle", c.min_angle);
            rep.step(
                "horseshoe",
                true,
                format!(
                    "A- {:.6} A+ {:.6} pieces {} angle {:.4}",
                    c.a_minus, c.a_plus, c.cone_pieces, c.min_angle
                ),
            );
            Some(c)
        }
        Err(e) => {
            rep.step("horseshoe", false, e.to_string());
            None
        }
    }
}

fn toy_spec(t: &AffineHorseshoe, cfg: &PipelineConfig) -> CliResult<HorseshoeSpec> {
    let flat = vec![Interval::new(-1e-6, 1e-6); t.components.len()];
    Ok(HorseshoeSpec {
        components: t.components.clone(),
        links: t.links(),
        cones: ConeFieldSpec::new(flat.clone())?,
        coord: CoordChange::identity(),
        chain: ChainOptions::default(),
        sweep: sweep_options(cfg),
        slope_splits: cfg.horseshoe.slope_splits,
        stable: Some(flat),
    })
}

pub fn horseshoe(cfg: &PipelineConfig, _out: &Path, rep: &mut ProofReport) -> CliResult<()> {
    match cfg.horseshoe.model {
        Model::Toy => {
            let t = AffineHorseshoe::new(cfg.horseshoe.toy_expansion)?;
            let spec = toy_spec(&t, cfg)?;
            horseshoe_step(rep, verify_horseshoe(&t.source()?, &t.map, &spec));
        }
        Model::Universal => {
            let u = universal(cfg, rep)?;
            let (table, text) = cfg.table(&cfg.horseshoe.table)?;
            rep.input(&cfg.horseshoe.table, &text);
            let spec = horseshoe_spec(&table, &CoordChange::default(), &settings(cfg))?;
            let g = Iterate::new(&u.map, 3);
            horseshoe_step(rep, verify_horseshoe(&u.map, &g, &spec));
        }
    }
    Ok(())
}

fn class_f_step(rep: &mut ProofReport, r: &ClassFReport) {
    rep.value("C", r.c);
    rep.value("epsilon", r.epsilon);
    rep.value("gamma", r.gamma);
    rep.step(
        "class F constants",
        true,
        format!("C {:.4} eps {:.4} gamma {:.4} pieces {}", r.c, r.epsilon, r.gamma, r.pieces),
    );
    for c in &r.clauses {
        rep.step(&format!("clause {}", c.clause), c.ok, c.detail.clone());
    }
}

fn bundle_steps(rep: &mut ProofReport, b: &DistortionBundle, csv: &mut String) {
    rep.value("D", b.d);
    rep.value("tau_l", b.tau_l);
    rep.value("tau_r", b.tau_r);
    rep.value("dim_upper", b.dim_upper);
    rep.value("ln_dim_lower", b.dim_lower.closed_form.ln);
    rep.value("ln_dim_lower_root", b.dim_lower.root.ln);
    rep.value("ln_dim_lower_set", b.dim_lower_set.ln);
    rep.step("distortion", b.d.is_finite(), format!("D {:.4}", b.d));
    rep.step(
        "dimension bounds",
        b.dim_lower.closed_form.is_positive() && b.dim_upper <= 2.0,
        format!(
            "ln lower {:.6} (root {:.6}) upper {:.6}",
            b.dim_lower.closed_form.ln, b.dim_lower.root.ln, b.dim_upper
        ),
    );
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{}",
        b.c, b.epsilon, b.gamma, b.d, b.tau_l, b.tau_r, b.dim_lower.closed_form.ln, b.dim_lower.root.ln, b.dim_upper
    );
}

fn thickness_step(rep: &mut ProofReport, k: &MarkovComponents, lip: f64) -> Option<(f64, f64)> {
    match thicknesses(&k.k0b, &k.k0t, &k.k1b, &k.k1t, lip) {
        Ok((l, r)) => {
            rep.step("thickness", l > 0.0 && r > 0.0, format!("tau_L {l:.6} tau_R {r:.6}"));
            Some((l, r))
        }
        Err(e) => {
            rep.step("thickness", false, e.to_string());
            None
        }
    }
}

pub fn dimension(cfg: &PipelineConfig, out: &Path, rep: &mut ProofReport) -> CliResult<()> {
    let mut csv = String::from("C,epsilon,gamma,D,tau_l,tau_r,ln_dim_lower,ln_dim_lower_root,dim_upper\n");
    let finish = |csv: &str| -> CliResult<()> {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("dimension.csv"), csv)?;
        Ok(())
    };
    if let Some(i) = cfg.dimension.inject {
        let r = ClassFReport {
            c: i.c,
            epsilon: i.epsilon,
            gamma: i.gamma,
            rescale: 1.0,
            pieces: 0,
            clauses: Vec::new(),
        };
        rep.step("injected constants", true, format!("{i:?}"));
        match DistortionBundle::assemble(&r, i.tau_l, i.tau_r, i.a_minus, cfg.dimension.lip) {
            Ok(b) => bundle_steps(rep, &b, &mut csv),
            Err(e) => rep.step("dimension bounds", false, e.to_string()),
        }
        return finish(&csv);
    }
    match cfg.horseshoe.model {
        Model::Toy => {
            let t = AffineHorseshoe::new(cfg.horseshoe.toy_expansion)?;
            let spec = toy_spec(&t, cfg)?;
            let hs = horseshoe_step(rep, verify_horseshoe(&t.source()?, &t.map, &spec));
            let cf = duarte_constants(&t.map, &CoordChange::identity(), &t.components, &sweep_options(cfg))?;
            class_f_step(rep, &cf);
            let tau = thickness_step(rep, &t.endpoints(), 0.0);
            if let (Some(hs), Some((l, r))) = (hs, tau) {
                let b = DistortionBundle::assemble(&cf, l, r, hs.a_minus, 0.0)?;
                bundle_steps(rep, &b, &mut csv);
                rep.value("cantor_dim", t.cantor_dim());
            }
        }
        Model::Universal => {
            let u = universal(cfg, rep)?;
            let coord = CoordChange::default();
            let fp = fixed_point_step(&u, rep);
            let (table, text) = cfg.table(&cfg.horseshoe.table)?;
            rep.input(&cfg.horseshoe.table, &text);
            let spec = horseshoe_spec(&table, &coord, &settings(cfg))?;
            let g = Iterate::new(&u.map, 3);
            let hs = horseshoe_step(rep, verify_horseshoe(&u.map, &g, &spec));
            let cf = duarte_constants(&g, &coord, &spec.components, &spec.sweep)?;
            class_f_step(rep, &cf);
            if let Some(fp) = &fp {
                let opts = ManifoldOptions {
                    seed_count: cfg.dimension.seeds,
                    depth: cfg.dimension.depth,
                    lip: cfg.dimension.lip,
                    ..ManifoldOptions::default()
                };
                match enclose_stable_manifold(&u.map, fp, &coord, &opts) {
                    Ok(c) => {
                        std::fs::create_dir_all(out)?;
                        std::fs::write(out.join("manifold.csv"), c.to_csv())?;
                        rep.step("stable manifold", true, format!("{} boxes, lip {}", c.boxes.len(), c.lip));
                    }
                    Err(e) => rep.step("stable manifold", false, e.to_string()),
                }
            }
            let mut runs = Vec::new();
            let mut link_csv = String::from("table,from,to,power,ok,margin,cone_epsilon\n");
            for name in &cfg.dimension.endpoint_tables {
                let (t, text) = cfg.table(name)?;
                rep.input(name, &text);
                let r = endpoint_chain(&u.map, &t, &ChainOptions::default(), cfg.verify.max_shift)?;
                record_chain(rep, &r, &mut link_csv);
                runs.push((t, r));
            }
            std::fs::create_dir_all(out)?;
            std::fs::write(out.join("links.csv"), link_csv)?;
            let refs: Vec<_> = runs.iter().map(|(t, r)| (t, r)).collect();
            let tau = match endpoints_from_chains(&g, &coord, &refs) {
                Ok(k) => thickness_step(rep, &k, cfg.dimension.lip),
                Err(e) => {
                    rep.step("endpoints", false, e.to_string());
                    None
                }
            };
            if let (Some(hs), Some((l, r))) = (hs, tau) {
                match DistortionBundle::assemble(&cf, l, r, hs.a_minus, cfg.dimension.lip) {
                    Ok(b) => bundle_steps(rep, &b, &mut csv),
                    Err(e) => rep.step("dimension bounds", false, e.to_string()),
                }
            }
        }
    }
    finish(&csv)
}

pub fn tangle(cfg: &PipelineConfig, out: &Path, rep: &mut ProofReport) -> CliResult<()> {
    let u = universal(cfg, rep)?;
    let Some(fp) = fixed_point_step(&u, rep) else {
        return Ok(());
    };
    let (table, text) = cfg.table(&cfg.tangle.table)?;
    rep.input(&cfg.tangle.table, &text);
    let sets = table.resolve(Some(&u.scalings))?;
    let opts = table.chain_options(&ChainOptions::default())?;
    let r = run_chain(&table.name, &u.map, &sets, &table.chain_links(), &opts, cfg.verify.max_shift);
    let mut csv = String::from("table,from,to,power,ok,margin,cone_epsilon\n");
    record_chain(rep, &r, &mut csv);
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("links.csv"), csv)?;
    match assemble_tangle(&r, &u.scalings, &fp.p0, cfg.tangle.n, cfg.tangle.m) {
        Ok(t) => {
            let mut m = String::new();
            for row in &t.matrix {
                let cells: Vec<String> = row.iter().map(u8::to_string).collect();
                let _ = writeln!(m, "{}", cells.join(","));
            }
            std::fs::write(out.join("transition.csv"), &m)?;
            let mut pts = String::from("k,period,x_lo,x_hi,u_lo,u_hi\n");
            for p in &t.points {
                let _ = writeln!(
                    pts,
                    "{},{},{:e},{:e},{:e},{:e}",
                    p.k,
                    p.period,
                    p.point.x.lo(),
                    p.point.x.hi(),
                    p.point.u.lo(),
                    p.point.u.hi()
                );
            }
            std::fs::write(out.join("tangle_points.csv"), pts)?;
            rep.value("reach", t.reach);
            rep.value("approach", t.approach);
            rep.step(
                "tangle",
                true,
                format!(
                    "{0}x{0} tridiagonal matrix on symbols -{1}..{2}; orbits reach {3:.4e} and approach {4:.4e}",
                    t.matrix.len(),
                    t.n,
                    t.m,
                    t.reach,
                    t.approach
                ),
            );
        }
        Err(e) => rep.step("tangle", false, e.to_string()),
    }
    Ok(())
}
