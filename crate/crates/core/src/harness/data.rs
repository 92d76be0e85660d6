//! Image-directory ingestion and CSV tensor files.

use std::fs;
use std::path::Path;

use crate::classifier::LabeledTensor;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tensor::{unfold, AxisSet, DenseTensor};

/// Reads an 8-bit binary PGM, scaled to `[0, 1]`.
pub fn read_pgm(path: &Path) -> Result<Matrix> {
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let image::DynamicImage::ImageLuma8(gray) = img else {
        return Err(Error::format(path, "expected an 8-bit grayscale image"));
    };
    let (w, h) = gray.dimensions();
    let data = gray.into_raw().into_iter().map(|p| f64::from(p) / 255.0).collect();
    Matrix::from_vec(h as usize, w as usize, data)
}

/// Reads a headerless comma-separated matrix; values are used as-is.
pub fn read_csv_matrix(path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::format(path, format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "empty matrix"));
    }
    Matrix::from_rows(&rows).map_err(|_| Error::format(path, "ragged rows"))
}

pub fn write_csv_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|v| format!("{v:e}")))
            .map_err(|e| Error::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reshapes an `R×C` image into axes `(row_factors…, col_factors…)`.
/// Empty factor lists keep the dimension as a single axis.
pub fn image_to_tensor(img: &Matrix, row_factors: &[usize], col_factors: &[usize]) -> Result<DenseTensor> {
    let rows = if row_factors.is_empty() { vec![img.rows()] } else { row_factors.to_vec() };
    let cols = if col_factors.is_empty() { vec![img.cols()] } else { col_factors.to_vec() };
    if rows.iter().product::<usize>() != img.rows() || cols.iter().product::<usize>() != img.cols() {
        return Err(Error::Shape(format!(
            "factors {rows:?} x {cols:?} do not match a {}x{} image",
            img.rows(),
            img.cols()
        )));
    }
    let mut shape = rows;
    shape.extend(cols);
    DenseTensor::new(shape, img.as_slice().to_vec())
}

/// Loads `root/<label>/<file>` images (`.pgm` or `.csv`) as labeled tensors.
/// Labels and files are visited in sorted order.
pub fn load_image_dataset(
    root: &Path,
    row_factors: &[usize],
    col_factors: &[usize],
) -> Result<Vec<LabeledTensor>> {
    let mut class_dirs: Vec<_> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    let mut out = Vec::new();
    let mut image_shape: Option<(usize, usize)> = None;
    for dir in class_dirs {
        let label = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::format(&dir, "class directory name is not UTF-8"))?
            .to_string();
        let mut files: Vec<_> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for file in files {
            let ext = file.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            let img = match ext.as_deref() {
                Some("pgm") => read_pgm(&file)?,
                Some("csv") => read_csv_matrix(&file)?,
                _ => continue,
            };
            match image_shape {
                None => image_shape = Some(img.shape()),
                Some(s) if s != img.shape() => {
                    return Err(Error::format(
                        &file,
                        format!("image is {}x{}, dataset images are {}x{}", img.rows(), img.cols(), s.0, s.1),
                    ))
                }
                _ => {}
            }
            out.push(LabeledTensor::new(label.clone(), image_to_tensor(&img, row_factors, col_factors)?));
        }
    }
    if out.is_empty() {
        return Err(Error::format(root, "no .pgm or .csv images found under <label>/ directories"));
    }
    Ok(out)
}

/// Row/column factor split used when writing tensors as matrices: the first
/// `ceil(n/2)` axes form the rows.
pub fn matrix_factors(shape: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let split = shape.len().div_ceil(2);
    (shape[..split].to_vec(), shape[split..].to_vec())
}

/// Writes a labeled dataset as `root/<label>/<index>.csv`, each tensor stored
/// as its row-major matrix reinterpretation. Returns the reshape factors that
/// reload it.
pub fn write_dataset(root: &Path, data: &[LabeledTensor]) -> Result<(Vec<usize>, Vec<usize>)> {
    let first = data.first().ok_or_else(|| Error::Empty("no tensors to write".into()))?;
    let (rf, cf) = matrix_factors(first.tensor.shape());
    let rows = AxisSet::range(0, rf.len())?;
    let mut counters = std::collections::BTreeMap::<&str, usize>::new();
    for item in data {
        let dir = root.join(&item.label);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let idx = counters.entry(&item.label).or_default();
        let m = unfold(&item.tensor, &rows)?;
        write_csv_matrix(&dir.join(format!("{:04}.csv", *idx)), &m)?;
        *idx += 1;
    }
    Ok((rf, cf))
}
