use super::{positive, CellsError, ModelKind};
use crate::numerics::{ParamCount, ParamSet};

/// Closed-form weight count, biases excluded. `n_r` is ignored for
/// MC-LSTM.
pub fn param_count_formula(
    kind: ModelKind,
    n_c: usize,
    n_a: usize,
    n_r: usize,
) -> Result<u64, CellsError> {
    positive("cells", n_c)?;
    positive("aux", n_a)?;
    let (c, a) = (n_c as u64, n_a as u64);
    match kind {
        ModelKind::McLstm => Ok(2 * c * (a + c) + c * c * (a + c)),
        ModelKind::FsLstm => {
            positive("proj", n_r)?;
            let r = n_r as u64;
            Ok(2 * c * (r + c) + c * c * (r + c) + r * a)
        }
        ModelKind::Lstm => Err(CellsError::NoClosedForm(kind)),
    }
}

/// Largest projection width for which FS-LSTM has fewer weights than
/// MC-LSTM: `⌊n_a(n_c² + 2n_c) / (n_c² + 2n_c + n_a)⌋`.
pub fn max_projection_dim(n_c: usize, n_a: usize) -> Result<usize, CellsError> {
    positive("cells", n_c)?;
    positive("aux", n_a)?;
    let (c, a) = (n_c as u128, n_a as u128);
    let k = c * c + 2 * c;
    Ok((a * k / (k + a)) as usize)
}

/// Element count of the trainable tensors of an instantiated model.
pub fn param_count_actual(params: &ParamSet) -> ParamCount {
    params.count()
}
