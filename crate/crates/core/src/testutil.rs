use crate::ratmat::{MatrixPolynomial, Poly, RationalTransferMatrix};

pub fn w1_den() -> Poly {
    Poly::new(vec![1.0, -0.2, -0.25, 0.05])
}

pub fn w2_den() -> Poly {
    Poly::new(vec![1.0, -0.6, 0.03, 0.01])
}

/// `[W1; W2]` driven by one scalar noise.
pub fn example1_w() -> RationalTransferMatrix {
    let a = MatrixPolynomial::diagonal(&[w1_den(), w2_den()]);
    let b = MatrixPolynomial::from_entries(2, 1, &[Poly::one(), Poly::one()]);
    RationalTransferMatrix::new(a, b).unwrap()
}

pub fn example1_h() -> RationalTransferMatrix {
    RationalTransferMatrix::scalar(&[1.0, 0.5], &[1.0, 0.1]).unwrap()
}
