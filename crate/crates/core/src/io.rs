//! Binary file formats and dataset manifests.
//!
//! Every binary file starts with a four-byte magic and a little-endian
//! `u16` version (currently 1). All integers and IEEE-754 doubles are
//! little-endian; arrays are column-major.
//!
//! | magic  | contents |
//! |--------|----------|
//! | `TNSB` | dense tensor: `u8` order M, M × `u32` dims, ∏dims × `f64` |
//! | `TNST` | TT: `u8` M, M × `u32` dims, (M+1) × `u32` ranks, cores in order, each `R_{m-1}·I_m·R_m` × `f64` |
//! | `TNSC` | CP: `u8` M, `u32` rank R, M × `u32` dims, factors in order, each `I_m·R` × `f64` |
//! | `TNSG` | Gram: `u8` kind, `f64` σ, `u32` rank, `u8` flags, `u32` N, N × `u32` item ids, N·N × `f64` |
//! | `TNSM` | model: `u32` N, N × `f64` α, `f64` b, `f64` C, `f64` σ, `u32` rank, `u8` kind, `u8` flags, N × `i8` labels, `u8` converged, `u64` iterations |
//!
//! Kernel flags: bit 0 equilibrate, bit 1 normalize.

use std::fs;
use std::path::{Path, PathBuf};

use crate::cp::CpDecomposition;
use crate::error::{Error, Result};
use crate::kernel::{GramMatrix, KernelConfig, KernelItem, KernelKind};
use crate::svm::{LabeledDataset, SvmModel};
use crate::tensor::DenseTensor;
use crate::tt::{TtCore, TtDecomposition};
use crate::Matrix;

pub const FORMAT_VERSION: u16 = 1;
pub const TENSOR_MAGIC: [u8; 4] = *b"TNSB";
pub const TT_MAGIC: [u8; 4] = *b"TNST";
pub const CP_MAGIC: [u8; 4] = *b"TNSC";
pub const GRAM_MAGIC: [u8; 4] = *b"TNSG";
pub const MODEL_MAGIC: [u8; 4] = *b"TNSM";

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(magic: [u8; 4]) -> Self {
        let mut buf = magic.to_vec();
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        Self { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("{v} does not fit in u32")))?;
        self.buf.extend_from_slice(&v.to_le_bytes());
        Ok(())
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        self.buf.reserve(vs.len() * 8);
        for &v in vs {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(bytes: &'a [u8], magic: [u8; 4]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != magic {
            return Err(Error::BadMagic {
                expected: magic,
                found: bytes[..bytes.len().min(4)].to_vec(),
            });
        }
        let mut r = Self { bytes, pos: 4 };
        let version = u16::from_le_bytes(r.take::<2>("version")?);
        if version != FORMAT_VERSION {
            return Err(Error::BadVersion(version));
        }
        Ok(r)
    }

    fn take<const N: usize>(&mut self, what: &'static str) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self.bytes.get(self.pos..end).ok_or(Error::Truncated(what))?;
        self.pos = end;
        Ok(slice.try_into().expect("slice has length N"))
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take::<1>(what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take::<4>(what)?) as usize)
    }

    fn u64(&mut self, what: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take::<8>(what)?))
    }

    fn f64(&mut self, what: &'static str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take::<8>(what)?))
    }

    fn f64s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>> {
        let end = n
            .checked_mul(8)
            .and_then(|b| b.checked_add(self.pos))
            .ok_or(Error::Truncated(what))?;
        let slice = self.bytes.get(self.pos..end).ok_or(Error::Truncated(what))?;
        self.pos = end;
        Ok(slice
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }

    /// Reads the trailing `n` doubles, which must be exactly the rest of the file.
    fn payload(&mut self, n: usize) -> Result<Vec<f64>> {
        let rest = self.bytes.len() - self.pos;
        if rest % 8 != 0 || rest / 8 != n {
            return Err(Error::PayloadMismatch {
                expected: n,
                found: rest / 8,
            });
        }
        self.f64s(n, "payload")
    }

    fn finish(&self) -> Result<()> {
        let rest = self.bytes.len() - self.pos;
        if rest != 0 {
            return Err(Error::PayloadMismatch {
                expected: 0,
                found: rest.div_ceil(8),
            });
        }
        Ok(())
    }

    fn dims(&mut self, order: usize) -> Result<Vec<usize>> {
        (0..order).map(|_| self.u32("dims")).collect()
    }
}

fn kernel_flags(config: &KernelConfig) -> u8 {
    config.equilibrate as u8 | (config.normalize as u8) << 1
}

fn kind_from_code(code: u8) -> Result<KernelKind> {
    KernelKind::from_code(code).ok_or_else(|| Error::InvalidArgument(format!("unknown kernel code {code}")))
}

pub fn encode_tensor(x: &DenseTensor) -> Result<Vec<u8>> {
    let mut w = Writer::new(TENSOR_MAGIC);
    w.u8(x.order() as u8);
    for &d in x.dims() {
        w.u32(d)?;
    }
    w.f64s(x.data());
    Ok(w.buf)
}

pub fn decode_tensor(bytes: &[u8]) -> Result<DenseTensor> {
    let mut r = Reader::open(bytes, TENSOR_MAGIC)?;
    let order = r.u8("order")? as usize;
    let dims = r.dims(order)?;
    // Validate dims before trusting their product.
    DenseTensor::zeros(&dims)?;
    let data = r.payload(dims.iter().product())?;
    DenseTensor::new(dims, data)
}

pub fn encode_tt(t: &TtDecomposition) -> Result<Vec<u8>> {
    let mut w = Writer::new(TT_MAGIC);
    w.u8(t.order() as u8);
    for d in t.dims() {
        w.u32(d)?;
    }
    for r in t.ranks() {
        w.u32(r)?;
    }
    for c in t.cores() {
        w.f64s(c.data());
    }
    Ok(w.buf)
}

pub fn decode_tt(bytes: &[u8]) -> Result<TtDecomposition> {
    let mut r = Reader::open(bytes, TT_MAGIC)?;
    let order = r.u8("order")? as usize;
    if order == 0 {
        return Err(Error::InvalidTt("order 0".into()));
    }
    let dims = r.dims(order)?;
    let ranks: Vec<usize> = (0..=order).map(|_| r.u32("ranks")).collect::<Result<_>>()?;
    let expected: usize = (0..order).map(|m| ranks[m] * dims[m] * ranks[m + 1]).sum();
    let mut data = r.payload(expected)?.into_iter();
    let cores = (0..order)
        .map(|m| {
            let len = ranks[m] * dims[m] * ranks[m + 1];
            TtCore::new(ranks[m], dims[m], ranks[m + 1], data.by_ref().take(len).collect())
        })
        .collect::<Result<_>>()?;
    TtDecomposition::new(cores)
}

pub fn encode_cp(c: &CpDecomposition) -> Result<Vec<u8>> {
    let mut w = Writer::new(CP_MAGIC);
    w.u8(c.order() as u8);
    w.u32(c.rank())?;
    for d in c.dims() {
        w.u32(d)?;
    }
    for f in c.factors() {
        w.f64s(f.as_slice());
    }
    Ok(w.buf)
}

pub fn decode_cp(bytes: &[u8]) -> Result<CpDecomposition> {
    let mut r = Reader::open(bytes, CP_MAGIC)?;
    let order = r.u8("order")? as usize;
    let rank = r.u32("rank")?;
    let dims = r.dims(order)?;
    let expected = dims.iter().sum::<usize>() * rank;
    let mut data = r.payload(expected)?.into_iter();
    let factors = dims
        .iter()
        .map(|&d| Matrix::from_iterator(d, rank, data.by_ref().take(d * rank)))
        .collect();
    CpDecomposition::new(factors)
}

pub fn encode_gram(g: &GramMatrix) -> Result<Vec<u8>> {
    let mut w = Writer::new(GRAM_MAGIC);
    w.u8(g.config.kind.code());
    w.f64(g.config.sigma);
    w.u32(g.config.rank)?;
    w.u8(kernel_flags(&g.config));
    w.u32(g.len())?;
    for &id in &g.item_ids {
        w.u32(id)?;
    }
    w.f64s(g.values.as_slice());
    Ok(w.buf)
}

pub fn decode_gram(bytes: &[u8]) -> Result<GramMatrix> {
    let mut r = Reader::open(bytes, GRAM_MAGIC)?;
    let kind = kind_from_code(r.u8("kernel kind")?)?;
    let sigma = r.f64("sigma")?;
    let rank = r.u32("rank")?;
    let flags = r.u8("flags")?;
    let n = r.u32("item count")?;
    let item_ids = (0..n).map(|_| r.u32("item ids")).collect::<Result<_>>()?;
    let values = r.payload(n * n)?;
    Ok(GramMatrix {
        values: Matrix::from_vec(n, n, values),
        config: KernelConfig {
            kind,
            sigma,
            rank,
            equilibrate: flags & 1 != 0,
            normalize: flags & 2 != 0,
        },
        item_ids,
    })
}

pub fn encode_model(m: &SvmModel) -> Result<Vec<u8>> {
    let mut w = Writer::new(MODEL_MAGIC);
    w.u32(m.alpha.len())?;
    w.f64s(&m.alpha);
    w.f64(m.bias);
    w.f64(m.c);
    w.f64(m.config.sigma);
    w.u32(m.config.rank)?;
    w.u8(m.config.kind.code());
    w.u8(kernel_flags(&m.config));
    for &y in &m.labels {
        w.u8(y as u8);
    }
    w.u8(m.converged as u8);
    w.u64(m.iterations as u64);
    Ok(w.buf)
}

pub fn decode_model(bytes: &[u8]) -> Result<SvmModel> {
    let mut r = Reader::open(bytes, MODEL_MAGIC)?;
    let n = r.u32("item count")?;
    let alpha = r.f64s(n, "alpha")?;
    let bias = r.f64("bias")?;
    let c = r.f64("C")?;
    let sigma = r.f64("sigma")?;
    let rank = r.u32("rank")?;
    let kind = kind_from_code(r.u8("kernel kind")?)?;
    let flags = r.u8("flags")?;
    let labels: Vec<i8> = (0..n).map(|_| r.u8("labels").map(|b| b as i8)).collect::<Result<_>>()?;
    if let Some(&bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::InvalidLabel(bad as i64));
    }
    let converged = r.u8("converged")? != 0;
    let iterations = r.u64("iterations")? as usize;
    r.finish()?;
    Ok(SvmModel {
        alpha,
        bias,
        labels,
        c,
        config: KernelConfig {
            kind,
            sigma,
            rank,
            equilibrate: flags & 1 != 0,
            normalize: flags & 2 != 0,
        },
        converged,
        iterations,
    })
}

pub fn write_tensor(path: impl AsRef<Path>, x: &DenseTensor) -> Result<()> {
    Ok(fs::write(path, encode_tensor(x)?)?)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    decode_tensor(&fs::read(path)?)
}

pub fn write_tt(path: impl AsRef<Path>, t: &TtDecomposition) -> Result<()> {
    Ok(fs::write(path, encode_tt(t)?)?)
}

pub fn read_tt(path: impl AsRef<Path>) -> Result<TtDecomposition> {
    decode_tt(&fs::read(path)?)
}

pub fn write_cp(path: impl AsRef<Path>, c: &CpDecomposition) -> Result<()> {
    Ok(fs::write(path, encode_cp(c)?)?)
}

pub fn read_cp(path: impl AsRef<Path>) -> Result<CpDecomposition> {
    decode_cp(&fs::read(path)?)
}

pub fn write_gram(path: impl AsRef<Path>, g: &GramMatrix) -> Result<()> {
    Ok(fs::write(path, encode_gram(g)?)?)
}

pub fn read_gram(path: impl AsRef<Path>) -> Result<GramMatrix> {
    decode_gram(&fs::read(path)?)
}

pub fn write_model(path: impl AsRef<Path>, m: &SvmModel) -> Result<()> {
    Ok(fs::write(path, encode_model(m)?)?)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<SvmModel> {
    decode_model(&fs::read(path)?)
}

/// Reads a tensor, TT or CP file, dispatching on its magic.
pub fn read_item(path: impl AsRef<Path>) -> Result<KernelItem> {
    let bytes = fs::read(path)?;
    match bytes.get(..4) {
        Some(m) if m == TENSOR_MAGIC => decode_tensor(&bytes).map(KernelItem::Tensor),
        Some(m) if m == TT_MAGIC => decode_tt(&bytes).map(KernelItem::Tt),
        Some(m) if m == CP_MAGIC => decode_cp(&bytes).map(KernelItem::Cp),
        _ => Err(Error::BadMagic {
            expected: TENSOR_MAGIC,
            found: bytes[..bytes.len().min(4)].to_vec(),
        }),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    /// As written in the manifest; relative paths resolve against its directory.
    pub path: PathBuf,
    pub label: i8,
    pub id: Option<String>,
}

/// Line-oriented dataset listing:
///
/// ```text
/// # dims: 8 8 8
/// class_a/000.tnsb	-1	a000
/// class_b/000.tnsb	1
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub dims: Vec<usize>,
    pub entries: Vec<ManifestEntry>,
    /// Directory relative entry paths are resolved against.
    pub base_dir: PathBuf,
}

const DIMS_HEADER: &str = "# dims:";

impl DatasetManifest {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut dims = None;
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let bad = |message: String| Error::Manifest { line: lineno, message };
            if let Some(rest) = line.strip_prefix(DIMS_HEADER) {
                let parsed: Vec<usize> = rest
                    .split_whitespace()
                    .map(|d| d.parse().map_err(|_| bad(format!("bad dimension {d:?}"))))
                    .collect::<Result<_>>()?;
                DenseTensor::zeros(&parsed).map_err(|e| bad(e.to_string()))?;
                dims = Some(parsed);
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let path = fields.next().filter(|p| !p.is_empty()).ok_or_else(|| bad("missing path".into()))?;
            let label_text = fields.next().ok_or_else(|| bad("missing label".into()))?;
            let label: i64 = label_text
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad label {label_text:?}")))?;
            if label != 1 && label != -1 {
                return Err(bad(format!("label {label} is not -1 or +1")));
            }
            let id = fields.next().map(str::to_owned).filter(|s| !s.is_empty());
            if fields.next().is_some() {
                return Err(bad("too many fields".into()));
            }
            entries.push(ManifestEntry {
                path: PathBuf::from(path),
                label: label as i8,
                id,
            });
        }
        let dims = dims.ok_or_else(|| Error::Manifest {
            line: 0,
            message: format!("missing {DIMS_HEADER:?} header"),
        })?;
        Ok(Self {
            dims,
            entries,
            base_dir: base_dir.into(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn render(&self) -> String {
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        let mut out = format!("{DIMS_HEADER} {}\n", dims.join(" "));
        for e in &self.entries {
            out.push_str(&format!("{}\t{}", e.path.display(), e.label));
            if let Some(id) = &e.id {
                out.push('\t');
                out.push_str(id);
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(fs::write(path, self.render())?)
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    pub fn labels(&self) -> Vec<i8> {
        self.entries.iter().map(|e| e.label).collect()
    }

    /// Loads every entry as a kernel item, checking it against the declared dims.
    pub fn load_items(&self) -> Result<Vec<KernelItem>> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let item = read_item(self.resolve(e))?;
                let dims = match &item {
                    KernelItem::Tensor(x) => x.dims().to_vec(),
                    KernelItem::Tt(t) => t.dims(),
                    KernelItem::Cp(c) => c.dims(),
                };
                if dims != self.dims {
                    return Err(Error::DimensionMismatch(format!(
                        "entry {i} ({}) has dims {dims:?}, manifest declares {:?}",
                        e.path.display(),
                        self.dims
                    )));
                }
                Ok(item)
            })
            .collect()
    }

    /// Loads a dataset of raw tensors.
    pub fn load_dataset(&self) -> Result<LabeledDataset> {
        let items = self
            .load_items()?
            .into_iter()
            .enumerate()
            .map(|(i, item)| match item {
                KernelItem::Tensor(x) => Ok(x),
                _ => Err(Error::InvalidArgument(format!("entry {i} is a decomposition, expected a raw tensor"))),
            })
            .collect::<Result<_>>()?;
        LabeledDataset::new(items, self.labels())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelKind;
    use crate::tt::{tt_svd_unique, TtTruncation};

    fn sample() -> DenseTensor {
        DenseTensor::from_fn(&[3, 4, 5], |i| (i[0] as f64 - 1.5) * 0.1 + (i[1] * i[2]) as f64 / 7.0).unwrap()
    }

    #[test]
    fn tensor_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.tnsb");
        let x = sample();
        write_tensor(&path, &x).unwrap();
        let y = read_tensor(&path).unwrap();
        assert_eq!(x.dims(), y.dims());
        for (a, b) in x.data().iter().zip(y.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn tensor_header_layout() {
        let x = DenseTensor::new(vec![2], vec![1.0, -2.0]).unwrap();
        let bytes = encode_tensor(&x).unwrap();
        let mut expected = b"TNSB".to_vec();
        expected.extend_from_slice(&[1, 0, 1, 2, 0, 0, 0]);
        expected.extend_from_slice(&1.0f64.to_le_bytes());
        expected.extend_from_slice(&(-2.0f64).to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn tensor_format_errors() {
        assert!(matches!(decode_tensor(&[]), Err(Error::BadMagic { .. })));
        assert!(matches!(decode_tensor(b"XXXX\x01\x00"), Err(Error::BadMagic { .. })));
        assert!(matches!(decode_tensor(b"TNSB\x02\x00"), Err(Error::BadVersion(2))));
        assert!(matches!(decode_tensor(b"TNSB\x01\x00\x02\x02\x00"), Err(Error::Truncated(_))));

        let mut bytes = b"TNSB\x01\x00\x02".to_vec();
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        for v in [1.0f64, 2.0, 3.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert!(matches!(
            decode_tensor(&bytes),
            Err(Error::PayloadMismatch { expected: 4, found: 3 })
        ));
        let codes: Vec<&str> = [
            decode_tensor(&[]).unwrap_err(),
            decode_tensor(b"TNSB\x02\x00").unwrap_err(),
            decode_tensor(b"TNSB\x01").unwrap_err(),
            decode_tensor(&bytes).unwrap_err(),
        ]
        .iter()
        .map(Error::code)
        .collect();
        assert_eq!(codes, vec!["bad-magic", "bad-version", "truncated", "payload-mismatch"]);
    }

    #[test]
    fn decomposition_roundtrips() {
        let x = sample();
        let tt = tt_svd_unique(&x, TtTruncation::FixedRank(2)).unwrap();
        assert_eq!(decode_tt(&encode_tt(&tt).unwrap()).unwrap(), tt);
        let cp = crate::cp::tt_to_cp(&tt);
        assert_eq!(decode_cp(&encode_cp(&cp).unwrap()).unwrap(), cp);
        assert!(matches!(decode_cp(&encode_tt(&tt).unwrap()), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn gram_and_model_roundtrip() {
        let mut config = KernelConfig::new(KernelKind::TtNaive, 0.125, 3);
        config.normalize = true;
        let g = GramMatrix {
            values: Matrix::from_fn(3, 3, |i, j| 1.0 / (1.0 + i as f64 + j as f64)),
            config,
            item_ids: vec![4, 7, 9],
        };
        assert_eq!(decode_gram(&encode_gram(&g).unwrap()).unwrap(), g);

        let m = SvmModel {
            alpha: vec![0.0, 0.5, 0.25],
            bias: -0.3,
            labels: vec![1, -1, 1],
            c: 2.0,
            config: KernelConfig::new(KernelKind::TtMmk, 4.0, 2),
            converged: true,
            iterations: 17,
        };
        let bytes = encode_model(&m).unwrap();
        assert_eq!(decode_model(&bytes).unwrap(), m);
        assert!(matches!(decode_model(&bytes[..bytes.len() - 3]), Err(Error::Truncated(_))));
    }

    #[test]
    fn manifest_parse_and_render() {
        let text = "# dims: 2 3\n# comment\na.tnsb\t-1\tfirst\n\nsub/b.tnsb\t1\n";
        let m = DatasetManifest::parse(text, "/data").unwrap();
        assert_eq!(m.dims, vec![2, 3]);
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[0].id.as_deref(), Some("first"));
        assert_eq!(m.entries[1].label, 1);
        assert_eq!(m.resolve(&m.entries[1]), PathBuf::from("/data/sub/b.tnsb"));
        let reparsed = DatasetManifest::parse(&m.render(), "/data").unwrap();
        assert_eq!(reparsed, m);

        assert!(DatasetManifest::parse("a\t1\n", ".").is_err());
        assert!(matches!(
            DatasetManifest::parse("# dims: 2\na\t0\n", "."),
            Err(Error::Manifest { line: 2, .. })
        ));
        assert!(DatasetManifest::parse("# dims: 2 x\n", ".").is_err());
        assert!(DatasetManifest::parse("# dims: 2\na\n", ".").is_err());
    }

    #[test]
    fn manifest_checks_item_dims() {
        let dir = tempfile::tempdir().unwrap();
        write_tensor(dir.path().join("a.tnsb"), &sample()).unwrap();
        let good = DatasetManifest::parse("# dims: 3 4 5\na.tnsb\t1\n", dir.path()).unwrap();
        assert_eq!(good.load_dataset().unwrap().len(), 1);
        let bad = DatasetManifest::parse("# dims: 3 4 6\na.tnsb\t1\n", dir.path()).unwrap();
        assert!(matches!(bad.load_dataset(), Err(Error::DimensionMismatch(_))));
    }
}
