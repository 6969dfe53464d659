//! Minimal PNG bar charts: one bar per table row, labelled with its rate.

use image::{Rgb, RgbImage};

use super::{format_tenths, GroupKey, SuccessTable};

const BAR: u32 = 36;
const GAP: u32 = 18;
const MARGIN: u32 = 24;
const PLOT_H: u32 = 200;
const SCALE: u32 = 2;

const PALETTE: [[u8; 3]; 6] =
    [[70, 114, 196], [237, 125, 49], [112, 173, 71], [165, 165, 165], [255, 192, 0], [91, 155, 213]];

/// 3x5 glyphs, one row per byte, high bit on the left.
fn glyph(c: char) -> [u8; 5] {
    match c {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b010, 0b010, 0b010],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        '.' => [0, 0, 0, 0, 0b010],
        _ => [0; 5],
    }
}

fn draw_text(img: &mut RgbImage, text: &str, x0: u32, y0: u32) {
    let black = Rgb([0, 0, 0]);
    for (i, c) in text.chars().enumerate() {
        let gx = x0 + i as u32 * 4 * SCALE;
        for (row, bits) in glyph(c).iter().enumerate() {
            for col in 0..3u32 {
                if bits & (0b100 >> col) != 0 {
                    for dy in 0..SCALE {
                        for dx in 0..SCALE {
                            let (x, y) = (gx + col * SCALE + dx, y0 + row as u32 * SCALE + dy);
                            if x < img.width() && y < img.height() {
                                img.put_pixel(x, y, black);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Bars are coloured by category when the table is grouped by it, else by row.
pub fn bar_chart(table: &SuccessTable) -> RgbImage {
    let n = table.rows.len().max(1) as u32;
    let width = 2 * MARGIN + n * BAR + (n - 1) * GAP;
    let height = PLOT_H + 2 * MARGIN + 6 * SCALE;
    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    let base = MARGIN + 6 * SCALE + PLOT_H;
    let cat_idx = table.group_by.iter().position(|k| *k == GroupKey::Category);
    for x in MARGIN / 2..width - MARGIN / 2 {
        img.put_pixel(x, base, Rgb([0, 0, 0]));
    }
    for (i, row) in table.rows.iter().enumerate() {
        let colour = match cat_idx {
            Some(ci) => match row.key[ci].as_str() {
                "A" => PALETTE[0],
                "B" => PALETTE[1],
                "C" => PALETTE[2],
                _ => PALETTE[3],
            },
            None => PALETTE[i % PALETTE.len()],
        };
        let x0 = MARGIN + i as u32 * (BAR + GAP);
        let h = (row.rate_tenths() as u32 * PLOT_H) / 1000;
        for x in x0..x0 + BAR {
            for y in base - h..base {
                img.put_pixel(x, y, Rgb(colour));
            }
        }
        let label = format_tenths(row.rate_tenths());
        let text_w = label.len() as u32 * 4 * SCALE;
        let tx = (x0 + BAR / 2).saturating_sub(text_w / 2);
        draw_text(&mut img, &label, tx, base - h - 6 * SCALE);
    }
    img
}
