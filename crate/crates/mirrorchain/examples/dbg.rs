use mirrorchain::*;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
fn main() {
    let spec = ChainSpec::uniform_pst(8).unwrap();
    let n = 8usize;
    let basis: Vec<usize> = (0..(1usize<<n)).filter(|i| i.count_ones()==3).collect();
    let index_of: std::collections::HashMap<usize,usize> = basis.iter().enumerate().map(|(i,&b)|(b,i)).collect();
    let dim = basis.len();
    let mut hr = DMatrix::<f64>::zeros(dim, dim);
    for (col,&idx) in basis.iter().enumerate() {
        for bond in 0..n-1 {
            let pair = (1usize<<bond)|(1usize<<(bond+1));
            let occ = idx & pair;
            if occ != 0 && occ != pair {
                let row = index_of[&(idx^pair)];
                hr[(row,col)] = spec.couplings[bond];
            }
        }
    }
    let eig = hr.clone().symmetric_eigen();
    let mut rec = DMatrix::<f64>::zeros(dim,dim);
    for i in 0..dim {
        let v = eig.eigenvectors.column(i);
        rec += (v * v.transpose()) * eig.eigenvalues[i];
    }
    println!("REAL reconstruction err {:e}", (rec - &hr).norm());

    // SVD check on a complex matrix with clustered singulars
    let hc = hr.map(|x| C64::new(x, 0.0));
    let svd = hc.clone().svd(true, true);
    let u = svd.u.unwrap(); let vt = svd.v_t.unwrap();
    let mut s = DMatrix::<C64>::zeros(dim,dim);
    for i in 0..dim { s[(i,i)] = C64::new(svd.singular_values[i],0.0); }
    println!("SVD reconstruction err {:e}", (&u * s * vt - &hc).norm());
}
