use std::collections::HashMap;
use std::ops::Range;
use std::sync::{Arc, Mutex, OnceLock};

/// Graded-lex monomial layout for `dim` variables up to total degree `order`,
/// with precomputed product and derivative index lists.
#[derive(Debug)]
pub(crate) struct MonomialTable {
    pub dim: usize,
    pub order: usize,
    exps: Vec<u8>,
    /// `offsets[k]` is the index of the first monomial of degree `k`;
    /// `offsets[order + 1]` is the total count.
    offsets: Vec<usize>,
    lookup: HashMap<Vec<u8>, u32>,
    products: Vec<(u32, u32, u32)>,
    /// `product_ranges[da][db]` indexes `products` for factors of degrees `da`, `db`.
    product_ranges: Vec<Vec<Range<usize>>>,
    /// Per direction: `(source, target, factor)` sorted by source index.
    derivs: Vec<Vec<(u32, u32, f64)>>,
}

fn monomials_of_degree(dim: usize, deg: usize, out: &mut Vec<Vec<u8>>) {
    fn rec(dim: usize, pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if pos + 1 == dim {
            cur[pos] = left as u8;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[pos] = e as u8;
            rec(dim, pos + 1, left - e, cur, out);
        }
    }
    let mut cur = vec![0u8; dim];
    rec(dim, 0, deg, &mut cur, out);
}

impl MonomialTable {
    fn build(dim: usize, order: usize) -> Self {
        assert!(dim >= 1, "jets need at least one variable");
        let mut list = Vec::new();
        let mut offsets = Vec::with_capacity(order + 2);
        for deg in 0..=order {
            offsets.push(list.len());
            monomials_of_degree(dim, deg, &mut list);
        }
        offsets.push(list.len());
        let lookup: HashMap<Vec<u8>, u32> =
            list.iter().enumerate().map(|(i, e)| (e.clone(), i as u32)).collect();

        let mut products = Vec::new();
        let mut product_ranges = vec![vec![0..0; order + 1]; order + 1];
        let mut target = vec![0u8; dim];
        for da in 0..=order {
            for db in 0..=order - da {
                let start = products.len();
                for i in offsets[da]..offsets[da + 1] {
                    for j in offsets[db]..offsets[db + 1] {
                        for v in 0..dim {
                            target[v] = list[i][v] + list[j][v];
                        }
                        products.push((i as u32, j as u32, lookup[&target]));
                    }
                }
                product_ranges[da][db] = start..products.len();
            }
        }

        let mut derivs = vec![Vec::new(); dim];
        for (i, e) in list.iter().enumerate() {
            for (v, dv) in derivs.iter_mut().enumerate() {
                if e[v] > 0 {
                    let mut t = e.clone();
                    t[v] -= 1;
                    dv.push((i as u32, lookup[&t], e[v] as f64));
                }
            }
        }

        let exps = list.concat();
        Self { dim, order, exps, offsets, lookup, products, product_ranges, derivs }
    }

    pub fn shared(dim: usize, order: usize) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MonomialTable>>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("monomial table cache poisoned");
        guard
            .entry((dim, order))
            .or_insert_with(|| Arc::new(Self::build(dim, order)))
            .clone()
    }

    /// Number of monomials of degree at most `deg`.
    #[inline]
    pub fn count(&self, deg: usize) -> usize {
        self.offsets[deg.min(self.order) + 1]
    }

    #[inline]
    pub fn degree_range(&self, deg: usize) -> Range<usize> {
        self.offsets[deg]..self.offsets[deg + 1]
    }

    #[inline]
    pub fn exponents(&self, idx: usize) -> &[u8] {
        &self.exps[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.lookup.get(exps).map(|&i| i as usize)
    }

    #[inline]
    pub fn products(&self, da: usize, db: usize) -> &[(u32, u32, u32)] {
        &self.products[self.product_ranges[da][db].clone()]
    }

    #[inline]
    pub fn derivs(&self, dir: usize) -> &[(u32, u32, f64)] {
        &self.derivs[dir]
    }
}
