//! Report assembly: header stamps, fixed-schema JSON emitters.
//!
//! Every file carries the tool version and the config hash. CSV bodies get
//! them as leading comment lines; JSON bodies carry a "meta" object. No
//! timestamps anywhere, so reruns are byte-identical.

use warplab::numeric::fmt_sig12;
use warplab::spectrum::{ClassificationRecord, SpectralReport};
use warplab::weyl::WeylReport;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// JSON number at report precision; non-finite values become null.
fn jnum(x: f64) -> String {
    if x.is_finite() {
        fmt_sig12(x)
    } else {
        "null".to_string()
    }
}

pub fn csv_header_block(hash: u64) -> String {
    format!("# warplab {TOOL_VERSION}\n# config {hash:016x}\n")
}

pub fn json_meta(hash: u64) -> String {
    format!("\"meta\": {{\"tool_version\": \"{TOOL_VERSION}\", \"config_hash\": \"{hash:016x}\"}}")
}

/// JSON array mirroring the quotient report fields.
pub fn weyl_reports_json(hash: u64, reports: &[WeylReport]) -> String {
    let mut body = String::new();
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            body.push_str(",\n");
        }
        body.push_str(&format!(
            "    {{\"lambda\": {}, \"beta\": {}, \"quotient\": {}, \"terms\": {{\"grad_deficit\": {}, \"potential\": {}, \"far_band\": {}, \"near_band\": {}}}, \"F_t\": {}, \"mu_measures\": {{\"mu_tmS\": {}, \"mu_sS\": {}, \"mu_t1t\": {}}}, \"norm_lower\": {}}}",
            jnum(r.lambda),
            jnum(r.beta),
            jnum(r.quotient),
            jnum(r.terms.grad_deficit),
            jnum(r.terms.potential),
            jnum(r.terms.far_band),
            jnum(r.terms.near_band),
            jnum(r.f_t),
            jnum(r.mu.window),
            jnum(r.mu.far),
            jnum(r.mu.near),
            jnum(r.norm_lower),
        ));
    }
    format!(
        "{{\n  {},\n  \"reports\": [\n{}\n  ]\n}}\n",
        json_meta(hash),
        body
    )
}

/// Classification records `{"lambda": x, "verdict": "...", "amplitude_ratio": y}`.
pub fn classification_json(hash: u64, records: &[ClassificationRecord]) -> String {
    let mut body = String::new();
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            body.push_str(",\n");
        }
        body.push_str(&format!(
            "    {{\"lambda\": {}, \"verdict\": \"{}\", \"amplitude_ratio\": {}, \"oracle_candidate\": {}}}",
            jnum(r.lambda),
            r.verdict.as_str(),
            jnum(r.amplitude_ratio),
            r.oracle_candidate,
        ));
    }
    format!(
        "{{\n  {},\n  \"records\": [\n{}\n  ]\n}}\n",
        json_meta(hash),
        body
    )
}

/// Spectrum summary: eigenvalues plus the bottom-of-spectrum fit.
pub fn spectrum_json(hash: u64, report: &SpectralReport) -> String {
    let mut eigen = String::new();
    for (i, e) in report.eigenvalues.iter().enumerate() {
        if i > 0 {
            eigen.push_str(", ");
        }
        eigen.push_str(&format!(
            "{{\"value\": {}, \"error\": {}}}",
            jnum(e.value),
            jnum(e.error)
        ));
    }
    let extrapolation = match report.extrapolation {
        Some(e) => format!(
            "{{\"limit\": {}, \"coefficient\": {}, \"residual\": {}}}",
            jnum(e.limit),
            jnum(e.coefficient),
            jnum(e.residual)
        ),
        None => "null".to_string(),
    };
    format!(
        "{{\n  {},\n  \"threshold\": {},\n  \"eigenvalues\": [{}],\n  \"extrapolation\": {}\n}}\n",
        json_meta(hash),
        jnum(report.threshold),
        eigen,
        extrapolation
    )
}

/// Mesh identity report with solver context.
#[allow(clippy::too_many_arguments)]
pub fn mesh_json(
    hash: u64,
    identities: &warplab::mesh::IdentityReport,
    window: (f64, f64),
    ell_estimate: f64,
    selfadjointness_gap: f64,
    max_b_err: f64,
) -> String {
    format!(
        "{{\n  {},\n  \"identities\": {{\"coarea_err\": {}, \"flux_err\": {}, \"deltab_resid\": {}, \"max_gradb\": {}, \"I_plus\": {}, \"I_minus\": {}, \"clamped_fraction\": {}}},\n  \"window\": [{}, {}],\n  \"ell_estimate\": {},\n  \"selfadjointness_gap\": {},\n  \"max_b_minus_r_rel\": {}\n}}\n",
        json_meta(hash),
        jnum(identities.coarea_err),
        jnum(identities.flux_err),
        jnum(identities.deltab_resid),
        jnum(identities.max_gradb),
        jnum(identities.i_plus),
        jnum(identities.i_minus),
        jnum(identities.clamped_fraction),
        jnum(window.0),
        jnum(window.1),
        jnum(ell_estimate),
        jnum(selfadjointness_gap),
        jnum(max_b_err),
    )
}
