/** DOM rendering for the three views. The controller owns all state; these
 * functions rebuild the relevant container from it on every change.
 */

import { drawLineChart, metricsToSeries } from "./charts.js";
import type { AppState } from "./state.js";
import type { QueryItemDoc, UiQueryItem } from "./types.js";

export function decodePixels(doc: QueryItemDoc): Uint8ClampedArray {
  const raw = atob(doc.pixels);
  const bytes = new Uint8ClampedArray(raw.length);
  for (let i = 0; i < raw.length; i++) bytes[i] = raw.charCodeAt(i);
  return bytes;
}

/** Paint the grayscale payload onto a canvas, scaled up with hard pixels. */
export function paintItem(canvas: HTMLCanvasElement, doc: QueryItemDoc): void {
  const bytes = decodePixels(doc);
  const off = document.createElement("canvas");
  off.width = doc.width;
  off.height = doc.height;
  const offCtx = off.getContext("2d");
  const ctx = canvas.getContext("2d");
  if (!offCtx || !ctx) return;
  const img = offCtx.createImageData(doc.width, doc.height);
  for (let i = 0; i < bytes.length; i++) {
    img.data[i * 4] = bytes[i];
    img.data[i * 4 + 1] = bytes[i];
    img.data[i * 4 + 2] = bytes[i];
    img.data[i * 4 + 3] = 255;
  }
  offCtx.putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

/** Digit-like class lists get keyboard hints and button strips; anything
 * else (named classes) gets a per-item dropdown. */
export function classesAreDigits(classes: string[]): boolean {
  return classes.every((c) => /^[0-9]$/.test(c));
}

function itemCard(
  item: UiQueryItem,
  index: number,
  focused: boolean,
  onChoose: (index: number, classIndex: number) => void,
  onFocus: (index: number) => void,
): HTMLElement {
  const card = document.createElement("div");
  card.className = "card" + (focused ? " focused" : "") + (item.chosen !== null ? " done" : "");
  card.tabIndex = 0;
  card.addEventListener("click", () => onFocus(index));

  const canvas = document.createElement("canvas");
  canvas.width = 96;
  canvas.height = 96;
  paintItem(canvas, item.doc);
  card.appendChild(canvas);

  const classes = item.doc.classes;
  if (classesAreDigits(classes)) {
    const strip = document.createElement("div");
    strip.className = "strip";
    classes.forEach((name, k) => {
      const btn = document.createElement("button");
      btn.textContent = name;
      if (item.chosen === k) btn.className = "chosen";
      btn.addEventListener("click", (ev) => {
        ev.stopPropagation();
        onChoose(index, k);
      });
      strip.appendChild(btn);
    });
    card.appendChild(strip);
  } else {
    const select = document.createElement("select");
    const blank = document.createElement("option");
    blank.textContent = "choose...";
    blank.disabled = true;
    blank.selected = item.chosen === null;
    select.appendChild(blank);
    classes.forEach((name, k) => {
      const opt = document.createElement("option");
      opt.value = String(k);
      opt.textContent = name;
      opt.selected = item.chosen === k;
      select.appendChild(opt);
    });
    select.addEventListener("change", () => onChoose(index, Number(select.value)));
    card.appendChild(select);
  }

  const status = document.createElement("div");
  status.className = "item-status";
  if (item.error) {
    status.textContent = item.error;
    status.classList.add("error");
  } else if (item.chosen !== null) {
    status.textContent = `labeled ${classes[item.chosen]}`;
  } else {
    status.textContent = `#${item.doc.id}`;
  }
  card.appendChild(status);
  return card;
}

export function renderApp(
  root: HTMLElement,
  state: AppState,
  onChoose: (index: number, classIndex: number) => void,
  onFocus: (index: number) => void,
): void {
  root.textContent = "";

  if (state.banner) {
    const banner = document.createElement("div");
    banner.className = "banner";
    banner.textContent = `connection problem: ${state.banner} (retrying)`;
    root.appendChild(banner);
  }

  const head = document.createElement("div");
  head.className = "head";
  const session = state.session;
  if (session) {
    head.textContent =
      `round ${session.round} · ${session.labeled_count} labeled · ` +
      `budget left ${session.budget_remaining}`;
  } else {
    head.textContent = "connecting to session…";
  }
  root.appendChild(head);

  if (state.view === "labeling") {
    const progress = document.createElement("div");
    progress.className = "progress";
    const done = state.items.filter((it) => it.chosen !== null).length;
    progress.textContent = `${done}/${state.items.length} labeled`;
    if (classesAreDigits(state.items[0]?.doc.classes ?? [])) {
      progress.textContent += " — press 0–9 to label the highlighted image";
    }
    root.appendChild(progress);

    const grid = document.createElement("div");
    grid.className = "grid";
    state.items.forEach((item, i) => {
      grid.appendChild(itemCard(item, i, i === state.focus, onChoose, onFocus));
    });
    root.appendChild(grid);
  } else if (state.view === "training" || state.view === "connecting") {
    const spin = document.createElement("div");
    spin.className = "training";
    spin.innerHTML = `<div class="spinner"></div><p>training… next query batch is being selected</p>`;
    root.appendChild(spin);
  } else if (state.view === "finished") {
    const doneMsg = document.createElement("p");
    doneMsg.className = "finished";
    doneMsg.textContent = "budget exhausted — final curves below";
    root.appendChild(doneMsg);
  }

  const chartsBox = document.createElement("div");
  chartsBox.className = "charts";
  const accCanvas = document.createElement("canvas");
  accCanvas.width = 420;
  accCanvas.height = 220;
  const eceCanvas = document.createElement("canvas");
  eceCanvas.width = 420;
  eceCanvas.height = 220;
  chartsBox.appendChild(accCanvas);
  chartsBox.appendChild(eceCanvas);
  root.appendChild(chartsBox);
  drawLineChart(accCanvas, metricsToSeries(state.metrics, "accuracy"), "test accuracy vs labels", "#2b6cb0");
  drawLineChart(eceCanvas, metricsToSeries(state.metrics, "ece"), "expected calibration error vs labels", "#c05621");
}
