//! Minimal row-major image container. Row 0 is the top row.

#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Image<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Image<T> {
        Image { width, height, data: vec![fill; width * height] }
    }

    /// Wraps row-major pixel data; `None` if the length does not match.
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Option<Image<T>> {
        (data.len() == width * height).then_some(Image { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.width.max(1))
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> Image<U> {
        Image { width: self.width, height: self.height, data: self.data.iter().map(f).collect() }
    }

    pub fn flipped_horizontal(&self) -> Image<T> {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.rows() {
            data.extend(row.iter().rev().cloned());
        }
        Image { width: self.width, height: self.height, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flip_reverses_rows() {
        let img = Image::from_vec(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(img.flipped_horizontal().data(), &[3, 2, 1, 6, 5, 4]);
        assert_eq!(*img.get(1, 1), 5);
        assert!(Image::from_vec(2, 2, vec![0; 3]).is_none());
    }
}
