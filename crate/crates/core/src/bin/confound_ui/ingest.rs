//! CSV dataset ingestion: header-addressed columns, strict numeric parsing,
//! and a binary treatment check that cites the offending row.

use std::path::Path;

use confound_ui::{Dataset, DesignMatrix, Error, Result};

fn input(reason: String) -> Error {
    Error::Input { reason }
}

pub struct IngestSpec<'a> {
    pub outcome: &'a str,
    pub treatment: &'a str,
    pub covariates: &'a [String],
    pub treatment_covariates: Option<&'a [String]>,
}

pub struct Ingested {
    pub data: Dataset,
    /// Present only when the treatment model uses its own covariate list.
    pub treatment_design: Option<DesignMatrix>,
}

pub fn ingest_csv(path: &Path, spec: &IngestSpec) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input(format!("could not open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| input(format!("could not read the header row: {e}")))?
        .clone();

    let find = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            input(format!(
                "column '{name}' not found; the file has: {}",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let outcome_col = find(spec.outcome)?;
    let treatment_col = find(spec.treatment)?;
    let covariate_cols = spec
        .covariates
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>>>()?;
    let treatment_cov_cols = spec
        .treatment_covariates
        .map(|cs| cs.iter().map(|c| find(c)).collect::<Result<Vec<_>>>())
        .transpose()?;

    let mut y = Vec::new();
    let mut z = Vec::new();
    let mut covariates: Vec<Vec<f64>> = vec![Vec::new(); covariate_cols.len()];
    let mut treatment_covariates: Vec<Vec<f64>> =
        vec![Vec::new(); treatment_cov_cols.as_ref().map_or(0, Vec::len)];

    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| input(format!("row {row}: {e}")))?;
        let field = |col: usize, name: &str| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            if raw.is_empty() {
                return Err(input(format!("missing value in column '{name}' on row {row}")));
            }
            raw.parse::<f64>().map_err(|_| {
                input(format!("could not parse '{raw}' in column '{name}' on row {row}"))
            })
        };

        y.push(field(outcome_col, spec.outcome)?);
        let zv = field(treatment_col, spec.treatment)?;
        z.push(if zv == 0.0 {
            false
        } else if zv == 1.0 {
            true
        } else {
            return Err(input(format!(
                "treatment column '{}' has non-binary value '{}' on row {row}",
                spec.treatment,
                record.get(treatment_col).unwrap_or("")
            )));
        });
        for (k, &col) in covariate_cols.iter().enumerate() {
            covariates[k].push(field(col, &spec.covariates[k])?);
        }
        if let Some(cols) = &treatment_cov_cols {
            let names = spec.treatment_covariates.unwrap();
            for (k, &col) in cols.iter().enumerate() {
                treatment_covariates[k].push(field(col, &names[k])?);
            }
        }
    }

    let n = y.len();
    if n == 0 {
        return Err(input(format!("{} has no data rows", path.display())));
    }
    let design = DesignMatrix::from_covariates(n, &covariates)?;
    let treatment_design = if treatment_cov_cols.is_some() {
        Some(DesignMatrix::from_covariates(n, &treatment_covariates)?)
    } else {
        None
    };
    let data = Dataset::new(y, z, design)?;
    Ok(Ingested { data, treatment_design })
}
