//! `generate`: base grid, `≡ᵗ`, a labeling pair differing on one end edge,
//! the compressed, precompressed and twinned pairs, and ISO of the compressed pair.

use serde::Serialize;
use serde_json::json;

use super::{Bundle, Format, Params, RunManifest};
use crate::cfi::{
    build_cfi, compress, precompress, twist_distance, validate_compressible_labeling, validate_compression,
    CfiInstance, EdgeLabeling,
};
use crate::error::{Error, Result};
use crate::graph::{twinned, ColoredGraph, GraphDocument, Vertex};
use crate::grid::{build_equiv_t, expected_row_class_counts, row_class_counts, GridDescriptor};
use crate::iso_cnf::{build_iso_restricted, dimacs_string, DimacsMeta, Family, IsoFormula};

/// Largest restricted ISO formula (in clauses) written without `--huge`.
pub const ISO_CLAUSE_CAP: u64 = 2_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairStats {
    pub vertices: usize,
    pub edges: usize,
    pub max_color_class: usize,
}

fn stats(g: &ColoredGraph) -> PairStats {
    PairStats { vertices: g.order(), edges: g.size(), max_color_class: g.color_class_profile().max }
}

#[derive(Debug)]
pub struct Generated {
    pub bundle: Bundle,
    pub manifest: RunManifest,
    pub checks: Vec<Check>,
}

impl Generated {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Upper bound on the clause count of [`build_iso_restricted`].
pub fn restricted_iso_estimate(g: &ColoredGraph, h: &ColoredGraph) -> u64 {
    let class = |x: &ColoredGraph| {
        let p = x.color_class_profile();
        move |c: u32| *p.sizes.get(&c).unwrap_or(&0) as u64
    };
    let (cg, ch) = (class(g), class(h));
    let same: u64 = g.color_class_profile().sizes.iter().map(|(&c, &n)| n as u64 * ch(c)).sum();
    let bij: u64 = g.color_class_profile().sizes.iter().map(|(&c, &n)| (n as u64 * ch(c) * (n as u64 + ch(c)).saturating_sub(2)).div_ceil(2)).sum();
    let eg: u64 = g.edges().map(|(u, v)| ch(g.color(u)) * ch(g.color(v))).sum();
    let eh: u64 = h.edges().map(|(u, v)| cg(h.color(u)) * cg(h.color(v))).sum();
    let n = (g.order() * h.order()) as u64;
    (g.order() + h.order()) as u64 + bij + eg + eh + (n - same)
}

fn iso_artifact(f: &IsoFormula, params: &Params, format: Format) -> (String, Vec<u8>) {
    let mut meta = vec![("k", params.k.to_string()), ("t", params.t.to_string()), ("w", params.w.to_string())];
    if let Some(q) = params.desk_q {
        meta.push(("desk_q", q.to_string()));
    }
    meta.push(("seed", params.seed.to_string()));
    let meta = DimacsMeta { params: meta.into_iter().map(|(a, b)| (a.to_string(), b)).collect() };
    match format {
        Format::Dimacs => ("iso.cnf".into(), dimacs_string(f, &meta).into_bytes()),
        Format::Json => {
            let count = |fam| f.family_count(fam);
            let doc = json!({
                "n_g": f.n_g,
                "n_h": f.n_h,
                "num_vars": f.num_vars(),
                "width": f.width,
                "variables": "x(u,v) = u*n_h + v + 1",
                "families": {
                    "color": count(Family::Color),
                    "bijection": count(Family::Bijection),
                    "edge": count(Family::Edge),
                    "domain": count(Family::Domain),
                },
                "sha256": crate::iso_cnf::formula_hash(f),
                "clauses": f.clauses,
            });
            let mut text = serde_json::to_string(&doc).expect("json value");
            text.push('\n');
            ("iso.json".into(), text.into_bytes())
        }
    }
}

pub fn cmd_generate(params: &Params, format: Format, huge: bool) -> Result<Generated> {
    let est = params.estimate();
    if est.huge && !huge {
        return Err(Error::StateSpaceTooLarge { measured: est.base_vertices, cap: super::HUGE_VERTICES });
    }
    let grid = params.grid()?;
    let rc = build_equiv_t(&grid, params.t)?;
    let base = grid.base();
    let end_edge: (Vertex, Vertex) = (grid.id(0, 0), grid.id(0, 1));
    let f = EdgeLabeling::zero(base);
    let g = EdgeLabeling::with_ones(base, &[end_edge])?;
    let fi = build_cfi(base, &f)?;
    let gi = build_cfi(base, &g)?;
    let (fc, gc) = (compress(&fi, &rc.eq)?, compress(&gi, &rc.eq)?);
    let (fp, gp) = (precompress(&fi, &rc.eq)?, precompress(&gi, &rc.eq)?);
    let (ft, gt) = (twinned(&fc.graph).graph, twinned(&gc.graph).graph);

    let counts = row_class_counts(&grid, &rc);
    // the period formula counts interior classes only when a row's interior is
    // at least one period long, which short desk rows need not be
    let interior = (grid.cols() - 2 * grid.f()) as u64;
    let expected: Vec<u64> = expected_row_class_counts(&grid, &rc)
        .into_iter()
        .zip(&rc.periods)
        .map(|(e, &p)| if p <= interior { e } else { interior + 2 * grid.f() as u64 })
        .collect();
    let (sc, st) = (stats(&fc.graph), stats(&ft));
    let mut checks = vec![
        Check::new("compression is valid", validate_compression(base, &rc.eq), ""),
        Check::new(
            "labelings are compressible",
            validate_compressible_labeling(base, &rc.eq, &f) && validate_compressible_labeling(base, &rc.eq, &g),
            "",
        ),
        Check::new("labelings differ on one edge", twist_distance(&f, &g)? == 1, format!("{end_edge:?}")),
        Check::new(
            "row class counts",
            counts.iter().zip(&expected).all(|(&a, &b)| a as u64 == b),
            format!("{counts:?} vs {expected:?}"),
        ),
        Check::new("compressed color class size 8", sc.max_color_class == 8, sc.max_color_class.to_string()),
        Check::new("twinned color class size 16", st.max_color_class == 16, st.max_color_class.to_string()),
    ];

    let mut bundle = Bundle::new();
    let descriptor: GridDescriptor = grid.descriptor(params.t, Some(params.w));
    bundle.add_json("grid.json", &json!({ "descriptor": descriptor, "base": GraphDocument::from_graph(base.graph()) }))?;
    bundle.add_json(
        "equiv.json",
        &json!({
            "t": rc.t,
            "periods": rc.periods,
            "row_class_counts": counts,
            "classes": rc.eq.classes(),
        }),
    )?;
    bundle.add_json(
        "labelings.json",
        &json!({
            "edges": base.edges(),
            "f": f.bits().iter().map(|&b| b as u8).collect::<Vec<_>>(),
            "g": g.bits().iter().map(|&b| b as u8).collect::<Vec<_>>(),
            "twisted_edge": [end_edge.0, end_edge.1],
        }),
    )?;
    let doc = |inst: &CfiInstance, graph: &ColoredGraph| crate::cfi::CfiDocument::new(inst, graph);
    bundle.add_json("compressed_g.json", &GraphDocument::from_graph(&fc.graph))?;
    bundle.add_json("compressed_h.json", &GraphDocument::from_graph(&gc.graph))?;
    bundle.add_json("precompressed_g.json", &doc(&fi, &fp))?;
    bundle.add_json("precompressed_h.json", &doc(&gi, &gp))?;
    bundle.add_json("twinned_g.json", &GraphDocument::from_graph(&ft))?;
    bundle.add_json("twinned_h.json", &GraphDocument::from_graph(&gt))?;

    let mut warnings = params.warnings();
    let est_iso = restricted_iso_estimate(&fc.graph, &gc.graph);
    let iso = if est_iso <= ISO_CLAUSE_CAP || huge {
        let formula = build_iso_restricted(&fc.graph, &gc.graph);
        checks.push(Check::new(
            "ISO width equals max color class",
            formula.width == sc.max_color_class,
            formula.width.to_string(),
        ));
        let (name, bytes) = iso_artifact(&formula, params, format);
        bundle.add(name, bytes);
        json!({ "pair": "compressed", "clauses": formula.clauses.len(), "num_vars": formula.num_vars() })
    } else {
        warnings.push(format!("ISO formula skipped: about {est_iso} clauses exceeds {ISO_CLAUSE_CAP}; pass --huge"));
        json!({ "pair": "compressed", "skipped": true, "estimated_clauses": est_iso })
    };
    bundle.add_json(
        "summary.json",
        &json!({
            "compressed": sc,
            "precompressed": stats(&fp),
            "twinned": st,
            "iso": iso,
            "checks": checks,
        }),
    )?;

    let mut parameters = serde_json::to_value(params)?;
    parameters["format"] = json!(format);
    if huge {
        parameters["huge"] = json!(true);
    }
    let mut manifest = RunManifest::new("generate", parameters);
    manifest.warnings = warnings;
    let manifest = bundle.seal(manifest)?;
    Ok(Generated { bundle, manifest, checks })
}
