//! JSON form of a certification report.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, Serializer};

use mintori_core::verify::CertReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub lagrangian_defect: f64,
    pub mean_curvature_defect: f64,
    pub killing_variation: f64,
    pub hausdorff_to_clifford: f64,
    pub passed: bool,
    pub resolution: Resolution,
    pub diagnostics: Diagnostics,
    pub orbit: Option<OrbitInfo>,
    pub config_sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub rows: usize,
    pub cols: usize,
    /// `parametric` (row stencil) or `grid`.
    pub method: String,
    pub step_u: f64,
    pub step_v: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub lagrangian_defect_raw: f64,
    pub mean_curvature_defect_raw: f64,
    pub richardson_gap: f64,
    pub gauss_curvature_min: f64,
    pub gauss_curvature_max: f64,
    pub immersion_condition: f64,
    pub killing_field: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitInfo {
    pub p: i64,
    pub q: u32,
    pub level: f64,
    pub level_over_f_plus: f64,
    pub xi_unwrapped: f64,
    pub t_return: f64,
    pub period: f64,
    pub closure: f64,
    pub max_drift: f64,
}

impl ReportJson {
    pub fn new(r: &CertReport, passed: bool, orbit: Option<OrbitInfo>, config_sha256: String) -> Self {
        ReportJson {
            lagrangian_defect: r.lagrangian_defect,
            mean_curvature_defect: r.mean_curvature_defect,
            killing_variation: r.killing_variation,
            hausdorff_to_clifford: r.hausdorff_to_clifford,
            passed,
            resolution: Resolution {
                rows: r.rows,
                cols: r.cols,
                method: if r.parametric { "parametric" } else { "grid" }.into(),
                step_u: r.step_u,
                step_v: r.step_v,
            },
            diagnostics: Diagnostics {
                lagrangian_defect_raw: r.lagrangian_raw,
                mean_curvature_defect_raw: r.mean_curvature_raw,
                richardson_gap: r.richardson_gap,
                gauss_curvature_min: r.gauss_min,
                gauss_curvature_max: r.gauss_max,
                immersion_condition: r.condition,
                killing_field: r.killing_field.clone(),
            },
            orbit,
            config_sha256,
        }
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = Serializer::with_formatter(&mut buf, Pretty17::default());
        self.serialize(&mut ser).expect("report serializes");
        buf.push(b'\n');
        String::from_utf8(buf).expect("utf-8")
    }
}

/// Pretty printer that writes floats with 17 significant digits.
#[derive(Default)]
struct Pretty17 {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl Formatter for Pretty17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(crate::output::num(value).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}
