//! File formats and persistence: the PGMX binary matrix format (with a CSV
//! read fallback), TOML dataset manifests, artifact directories for
//! intermediate pipeline results, and a synthetic multi-view dataset
//! generator.
//!
//! All floats are 64-bit; PGMX payloads are row-major little-endian IEEE-754,
//! so write∘read is the identity bit-for-bit for finite values.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::clustering::ClusteringResult;
use crate::error::{Error, Result};
use crate::gram::GramStack;
use crate::manifold::{grassmann_from_matrix, ProductGrassmannPoint};
use crate::solvers::{CoefficientMatrix, LaplacianPair};

const MAGIC: &[u8; 4] = b"PGMX";
const MATRIX_VERSION: u32 = 1;
const MANIFEST_VERSION: u32 = 1;
const ARTIFACT_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// PGMX matrix files
// ---------------------------------------------------------------------------

/// Writes a matrix in the PGMX format: magic "PGMX", version u32, rows u64,
/// cols u64 (all little-endian), then the row-major f64 payload.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + m.len() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    buf.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    fs::write(path, &buf).map_err(|e| Error::io(path, e))
}

/// Reads a PGMX matrix file; files with a `.csv` extension are parsed as
/// comma-separated decimal text, one row per line.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        return read_matrix_csv(path);
    }
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = [0u8; 24];
    file.read_exact(&mut header)
        .map_err(|_| Error::malformed(path, "file shorter than the PGMX header"))?;
    if &header[0..4] != MAGIC {
        return Err(Error::malformed(path, "bad magic (expected PGMX)"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != MATRIX_VERSION {
        return Err(Error::malformed(path, format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(header[16..24].try_into().unwrap()) as usize;

    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::malformed(path, "dimension overflow"))?;
    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(|e| Error::io(path, e))?;
    if payload.len() != expected {
        return Err(Error::malformed(
            path,
            format!("payload is {} bytes, expected {expected}", payload.len()),
        ));
    }

    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let off = (i * cols + j) * 8;
            m[(i, j)] = f64::from_le_bytes(payload[off..off + 8].try_into().unwrap());
        }
    }
    Ok(m)
}

fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| {
            Error::malformed(path, format!("line {}: {e}", lineno + 1))
        })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::malformed(
                    path,
                    format!("line {} has {} fields, expected {}", lineno + 1, row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::malformed(path, "empty CSV"));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

// ---------------------------------------------------------------------------
// Dataset manifests
// ---------------------------------------------------------------------------

/// One view's fixed dimensions across the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewSpec {
    pub ambient_dim: usize,
    pub subspace_dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleEntry {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    /// One raw-frame matrix file per view, relative to the manifest.
    pub view_paths: Vec<String>,
}

/// Dataset description: view dimensions plus per-sample file references.
/// Each view file holds the d_m × n matrix whose columns are the vectorized
/// frames of that view (row-major flattening, fixed per dataset).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub name: String,
    pub views: Vec<ViewSpec>,
    pub samples: Vec<SampleEntry>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != MANIFEST_VERSION {
            return Err(Error::Manifest(format!(
                "unsupported manifest version {}",
                self.format_version
            )));
        }
        if self.views.is_empty() {
            return Err(Error::Manifest("manifest declares no views".into()));
        }
        let m = self.views.len();
        let labeled = self.samples.iter().filter(|s| s.label.is_some()).count();
        if labeled != 0 && labeled != self.samples.len() {
            return Err(Error::Manifest(
                "labels must be present for all samples or none".into(),
            ));
        }
        for s in &self.samples {
            if s.view_paths.len() != m {
                return Err(Error::Manifest(format!(
                    "sample '{}' lists {} view paths, expected {m}",
                    s.id,
                    s.view_paths.len()
                )));
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> Option<Vec<usize>> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: DatasetManifest =
        toml::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    manifest.validate()?;
    Ok(manifest)
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    manifest.validate()?;
    let text = toml::to_string_pretty(manifest)
        .map_err(|e| Error::Manifest(format!("serialize: {e}")))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a dataset: reads every sample's view files and turns them into
/// Grassmann points with the manifest's subspace dimensions. Sample order is
/// manifest order.
pub fn load_dataset(
    manifest_path: &Path,
) -> Result<(Vec<ProductGrassmannPoint>, Option<Vec<usize>>)> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let mut dataset = Vec::with_capacity(manifest.samples.len());
    for sample in &manifest.samples {
        let mut views = Vec::with_capacity(manifest.views.len());
        for (m, rel) in sample.view_paths.iter().enumerate() {
            let path = base.join(rel);
            if !path.exists() {
                return Err(Error::Manifest(format!(
                    "sample '{}': missing view file {}",
                    sample.id,
                    path.display()
                )));
            }
            let raw = read_matrix(&path)?;
            let spec = manifest.views[m];
            if raw.nrows() != spec.ambient_dim {
                return Err(Error::Manifest(format!(
                    "sample '{}' view {m}: file has {} rows, manifest says {}",
                    sample.id,
                    raw.nrows(),
                    spec.ambient_dim
                )));
            }
            let point = grassmann_from_matrix(&raw, spec.subspace_dim).map_err(|e| match e {
                Error::DegenerateInput(msg) => {
                    Error::DegenerateInput(format!("sample '{}' view {m}: {msg}", sample.id))
                }
                other => other,
            })?;
            views.push(point);
        }
        dataset.push(ProductGrassmannPoint::new(views)?);
    }
    Ok((dataset, manifest.labels()))
}

// ---------------------------------------------------------------------------
// Synthetic dataset generator
// ---------------------------------------------------------------------------

/// Parameters for the synthetic union-of-subspaces generator. Each cluster
/// draws one random base subspace per view; samples are random points in
/// that subspace plus Gaussian noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub k: usize,
    pub views: Vec<ViewSpec>,
    pub samples_per_cluster: usize,
    pub frames_per_sample: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Manifest(format!("need k >= 2 clusters, got {}", self.k)));
        }
        if self.views.is_empty() || self.samples_per_cluster == 0 {
            return Err(Error::Manifest("need at least one view and one sample per cluster".into()));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::Manifest("noise_sigma must be >= 0".into()));
        }
        for (m, v) in self.views.iter().enumerate() {
            if v.subspace_dim < 1 || v.ambient_dim < v.subspace_dim {
                return Err(Error::Manifest(format!(
                    "view {m}: need 1 <= subspace_dim <= ambient_dim, got {v:?}"
                )));
            }
            if self.frames_per_sample < v.subspace_dim {
                return Err(Error::Manifest(format!(
                    "view {m}: frames_per_sample ({}) < subspace_dim ({})",
                    self.frames_per_sample, v.subspace_dim
                )));
            }
        }
        Ok(())
    }
}

fn gaussian_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Generates a dataset into `out_dir` and returns the manifest path.
/// Deterministic under the spec's seed: the same spec writes byte-identical
/// files.
pub fn synth_generate(spec: &SynthSpec, out_dir: &Path) -> Result<PathBuf> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // one orthonormal base per (cluster, view)
    let mut bases: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(spec.k);
    for _ in 0..spec.k {
        let mut per_view = Vec::with_capacity(spec.views.len());
        for v in &spec.views {
            let g = gaussian_matrix(&mut rng, v.ambient_dim, v.subspace_dim);
            per_view.push(g.qr().q());
        }
        bases.push(per_view);
    }

    let mut samples = Vec::new();
    for cluster in 0..spec.k {
        for s in 0..spec.samples_per_cluster {
            let id = format!("c{cluster}_s{s}");
            let mut view_paths = Vec::with_capacity(spec.views.len());
            for (m, v) in spec.views.iter().enumerate() {
                let coeff = gaussian_matrix(&mut rng, v.subspace_dim, spec.frames_per_sample);
                let mut frames = &bases[cluster][m] * coeff;
                if spec.noise_sigma > 0.0 {
                    frames += spec.noise_sigma
                        * gaussian_matrix(&mut rng, v.ambient_dim, spec.frames_per_sample);
                }
                let rel = format!("{id}_v{m}.pgmx");
                write_matrix(&out_dir.join(&rel), &frames)?;
                view_paths.push(rel);
            }
            samples.push(SampleEntry {
                id,
                label: Some(cluster),
                view_paths,
            });
        }
    }

    let manifest = DatasetManifest {
        format_version: MANIFEST_VERSION,
        name: format!("synth-k{}-seed{}", spec.k, spec.seed),
        views: spec.views.clone(),
        samples,
    };
    let manifest_path = out_dir.join("manifest.toml");
    write_manifest(&manifest_path, &manifest)?;
    Ok(manifest_path)
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ArtifactHeader {
    format_version: u32,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    view_dims: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    final_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_stationarity_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
}

impl ArtifactHeader {
    fn new(kind: &str) -> Self {
        Self {
            format_version: ARTIFACT_VERSION,
            kind: kind.into(),
            n_samples: None,
            view_dims: None,
            labels: None,
            iterations: None,
            converged: None,
            final_gap: None,
            objective: None,
            max_stationarity_residual: None,
            k: None,
            accuracy: None,
        }
    }
}

fn write_header(dir: &Path, header: &ArtifactHeader) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let text = toml::to_string_pretty(header)
        .map_err(|e| Error::Manifest(format!("serialize artifact header: {e}")))?;
    let path = dir.join("header.toml");
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))
}

fn read_header(dir: &Path, expected_kind: &str) -> Result<ArtifactHeader> {
    let path = dir.join("header.toml");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let header: ArtifactHeader = toml::from_str(&text)
        .map_err(|e| Error::malformed(&path, format!("bad header: {e}")))?;
    if header.format_version != ARTIFACT_VERSION {
        return Err(Error::malformed(
            &path,
            format!("unsupported artifact version {}", header.format_version),
        ));
    }
    if header.kind != expected_kind {
        return Err(Error::malformed(
            &path,
            format!("artifact kind is '{}', expected '{expected_kind}'", header.kind),
        ));
    }
    Ok(header)
}

/// Persists a Gram stack (plus dataset labels when known) as an artifact
/// directory: header.toml, per-view kernels, and the total.
pub fn save_gram(dir: &Path, gram: &GramStack, labels: Option<&[usize]>) -> Result<()> {
    let mut header = ArtifactHeader::new("gram_stack");
    header.n_samples = Some(gram.n_samples);
    header.view_dims = Some(gram.view_dims.clone());
    header.labels = labels.map(|l| l.to_vec());
    write_header(dir, &header)?;
    for (m, delta) in gram.per_view.iter().enumerate() {
        write_matrix(&dir.join(format!("view_{m}.pgmx")), delta)?;
    }
    write_matrix(&dir.join("total.pgmx"), &gram.total)
}

pub fn load_gram(dir: &Path) -> Result<(GramStack, Option<Vec<usize>>)> {
    let header = read_header(dir, "gram_stack")?;
    let view_dims = header
        .view_dims
        .ok_or_else(|| Error::malformed(dir, "gram artifact missing view_dims"))?;
    let n_samples = header
        .n_samples
        .ok_or_else(|| Error::malformed(dir, "gram artifact missing n_samples"))?;
    let mut per_view = Vec::with_capacity(view_dims.len());
    for m in 0..view_dims.len() {
        per_view.push(read_matrix(&dir.join(format!("view_{m}.pgmx")))?);
    }
    let total = read_matrix(&dir.join("total.pgmx"))?;
    Ok((
        GramStack {
            per_view,
            total,
            n_samples,
            view_dims,
        },
        header.labels,
    ))
}

pub fn save_laplacian(dir: &Path, lap: &LaplacianPair) -> Result<()> {
    write_header(dir, &ArtifactHeader::new("laplacian"))?;
    write_matrix(&dir.join("weights.pgmx"), &lap.w)?;
    write_matrix(&dir.join("laplacian.pgmx"), &lap.l)
}

pub fn load_laplacian(dir: &Path) -> Result<LaplacianPair> {
    read_header(dir, "laplacian")?;
    Ok(LaplacianPair {
        w: read_matrix(&dir.join("weights.pgmx"))?,
        l: read_matrix(&dir.join("laplacian.pgmx"))?,
    })
}

pub fn save_coefficient(dir: &Path, coeff: &CoefficientMatrix) -> Result<()> {
    let mut header = ArtifactHeader::new("coefficient");
    header.iterations = Some(coeff.iterations);
    header.converged = Some(coeff.converged);
    header.final_gap = Some(coeff.final_gap);
    header.objective = Some(coeff.objective);
    header.max_stationarity_residual = Some(coeff.max_stationarity_residual);
    write_header(dir, &header)?;
    write_matrix(&dir.join("z.pgmx"), &coeff.z)
}

pub fn load_coefficient(dir: &Path) -> Result<CoefficientMatrix> {
    let header = read_header(dir, "coefficient")?;
    Ok(CoefficientMatrix {
        z: read_matrix(&dir.join("z.pgmx"))?,
        iterations: header.iterations.unwrap_or(0),
        converged: header.converged.unwrap_or(false),
        final_gap: header.final_gap.unwrap_or(0.0),
        objective: header.objective.unwrap_or(0.0),
        max_stationarity_residual: header.max_stationarity_residual.unwrap_or(0.0),
    })
}

pub fn save_clustering(dir: &Path, result: &ClusteringResult) -> Result<()> {
    let mut header = ArtifactHeader::new("clustering");
    header.labels = Some(result.labels.clone());
    header.k = Some(result.k);
    header.accuracy = result.accuracy;
    write_header(dir, &header)?;
    write_matrix(&dir.join("affinity.pgmx"), &result.affinity)
}

pub fn load_clustering(dir: &Path) -> Result<ClusteringResult> {
    let header = read_header(dir, "clustering")?;
    Ok(ClusteringResult {
        labels: header
            .labels
            .ok_or_else(|| Error::malformed(dir, "clustering artifact missing labels"))?,
        affinity: read_matrix(&dir.join("affinity.pgmx"))?,
        k: header
            .k
            .ok_or_else(|| Error::malformed(dir, "clustering artifact missing k"))?,
        accuracy: header.accuracy,
    })
}
