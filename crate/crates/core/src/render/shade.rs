use super::RenderError;
use crate::camera::{Camera, View};
use crate::image::Image;
use crate::Vec3;

/// One view texture and the orthographic camera it was taken with.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureView {
    pub view: View,
    pub image: Image<[u8; 4]>,
    pub camera: Camera,
}

/// The four view textures, stored in front/left/back/right order.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureAtlas {
    views: Vec<TextureView>,
}

impl TextureAtlas {
    pub fn new(mut views: Vec<TextureView>) -> Result<TextureAtlas, RenderError> {
        views.sort_by_key(|v| v.view);
        let names: Vec<View> = views.iter().map(|v| v.view).collect();
        if names != View::ALL {
            return Err(RenderError::Atlas(format!("expected one texture per view, got {names:?}")));
        }
        if let Some(v) = views.iter().find(|v| v.image.width() == 0 || v.image.height() == 0) {
            return Err(RenderError::Atlas(format!("texture '{}' is empty", v.view)));
        }
        Ok(TextureAtlas { views })
    }

    pub fn views(&self) -> &[TextureView] {
        &self.views
    }

    pub fn get(&self, view: View) -> &TextureView {
        &self.views[view.quarter_turns() as usize]
    }
}

/// Bilinear RGBA sample of `p` projected into the view; `None` when it
/// projects outside the image.
fn sample_view(tv: &TextureView, p: &Vec3) -> Option<[f64; 4]> {
    let (w, h) = (tv.image.width(), tv.image.height());
    let (px, py, _) = tv.camera.project(p, w, h)?;
    if !(px >= -0.5 && px <= w as f64 - 0.5 && py >= -0.5 && py <= h as f64 - 0.5) {
        return None;
    }
    let x = px.clamp(0.0, (w - 1) as f64);
    let y = py.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let mut out = [0.0; 4];
    for (c, o) in out.iter_mut().enumerate() {
        let v = |xx: usize, yy: usize| tv.image.get(xx, yy)[c] as f64;
        let top = v(x0, y0) * (1.0 - fx) + v(x1, y0) * fx;
        let bottom = v(x0, y1) * (1.0 - fx) + v(x1, y1) * fx;
        *o = top * (1.0 - fy) + bottom * fy;
    }
    Some(out)
}

/// Blends the view textures at a surface point. Each view whose camera looks
/// against the normal gets weight `max(0, n . -v)`; views whose sample is
/// transparent are skipped. Without any contribution the view most aligned
/// with the normal (either way) supplies the color alone. Alpha is opaque.
pub fn shade_textured(point: &Vec3, normal: &Vec3, atlas: &TextureAtlas) -> [u8; 4] {
    let mut acc = [0.0; 3];
    let mut total = 0.0;
    for tv in &atlas.views {
        let w = normal.dot(&-tv.camera.forward).max(0.0);
        if w <= 0.0 {
            continue;
        }
        if let Some(c) = sample_view(tv, point).filter(|c| c[3] > 0.0) {
            for k in 0..3 {
                acc[k] += w * c[k];
            }
            total += w;
        }
    }
    let rgb = if total > 0.0 {
        acc.map(|a| a / total)
    } else {
        let mut best = &atlas.views[0];
        for tv in &atlas.views[1..] {
            if normal.dot(&tv.camera.forward).abs() > normal.dot(&best.camera.forward).abs() {
                best = tv;
            }
        }
        let c = sample_view(best, point).unwrap_or([0.0; 4]);
        [c[0], c[1], c[2]]
    };
    let q = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    [q(rgb[0]), q(rgb[1]), q(rgb[2]), 255]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atlas(colors: [[u8; 4]; 4]) -> TextureAtlas {
        let views = View::ALL
            .iter()
            .zip(colors)
            .map(|(&view, c)| TextureView { view, image: Image::new(8, 8, c), camera: view.camera(Vec3::zeros(), 1.0) })
            .collect();
        TextureAtlas::new(views).unwrap()
    }

    const RED: [u8; 4] = [255, 0, 0, 255];
    const BLUE: [u8; 4] = [0, 0, 255, 255];
    const GREEN: [u8; 4] = [0, 255, 0, 255];
    const GRAY: [u8; 4] = [100, 100, 100, 255];

    #[test]
    fn single_view_weight() {
        let a = atlas([RED, BLUE, GREEN, GRAY]);
        let p = Vec3::new(0.1, 0.2, 0.5);
        assert_eq!(shade_textured(&p, &Vec3::z(), &a), RED);
        assert_eq!(shade_textured(&p, &-Vec3::z(), &a), GREEN);
    }

    #[test]
    fn diagonal_normal_mixes_evenly() {
        let n = Vec3::new(1.0, 0.0, 1.0).normalize();
        let p = Vec3::new(0.3, 0.0, 0.3);
        assert_eq!(shade_textured(&p, &n, &atlas([GRAY, GRAY, GRAY, GRAY])), GRAY);
        let mixed = shade_textured(&p, &n, &atlas([[200, 0, 0, 255], [0, 0, 100, 255], GREEN, GRAY]));
        assert_eq!(mixed, [100, 0, 50, 255]);
    }

    #[test]
    fn transparent_samples_fall_back() {
        let clear = [9, 9, 9, 0];
        let a = atlas([clear, clear, clear, clear]);
        assert_eq!(shade_textured(&Vec3::zeros(), &Vec3::z(), &a), [9, 9, 9, 255]);
    }

    #[test]
    fn atlas_needs_four_views() {
        let v = TextureView { view: View::Front, image: Image::new(2, 2, RED), camera: View::Front.camera(Vec3::zeros(), 1.0) };
        assert!(TextureAtlas::new(vec![v]).is_err());
    }
}
