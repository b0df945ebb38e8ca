//! Lattice indexing. Node indices are row-major (C order): the last axis
//! varies fastest.

pub fn node_count(shape: &[usize]) -> usize {
    shape.iter().product()
}

pub fn coords(mut index: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for (axis, &len) in shape.iter().enumerate().rev() {
        out[axis] = index % len;
        index /= len;
    }
    out
}

pub fn index(coords: &[usize], shape: &[usize]) -> usize {
    coords.iter().zip(shape).fold(0, |acc, (&c, &len)| acc * len + c)
}

/// Node at the lattice center (`len / 2` on each axis).
pub fn center(shape: &[usize]) -> usize {
    let c: Vec<usize> = shape.iter().map(|&len| len / 2).collect();
    index(&c, shape)
}

pub fn manhattan(a: usize, b: usize, shape: &[usize]) -> usize {
    coords(a, shape)
        .iter()
        .zip(coords(b, shape))
        .map(|(&x, y)| x.abs_diff(y))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coords_round_trip() {
        let shape = [3, 4, 5];
        for i in 0..node_count(&shape) {
            assert_eq!(index(&coords(i, &shape), &shape), i);
        }
        assert_eq!(coords(7, &[3, 4]), vec![1, 3]);
        assert_eq!(center(&[5, 5]), 12);
    }
}
