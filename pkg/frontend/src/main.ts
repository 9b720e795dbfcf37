/** Bootstrap: wire the controller to the DOM and start the poll loop.
 * One poll in flight at a time; the next is scheduled only after the
 * current one settles, at whatever interval backoff dictates.
 */

import { ApiClient } from "./api.js";
import { AnnotationController } from "./state.js";
import { renderApp } from "./render.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const api = new ApiClient("");
const controller = new AnnotationController(api, (state) => {
  renderApp(
    root,
    state,
    (index, classIndex) => void controller.choose(index, classIndex),
    (index) => controller.setFocus(index),
  );
});

document.addEventListener("keydown", (ev) => {
  if (controller.state.view !== "labeling") return;
  if (ev.key >= "0" && ev.key <= "9") {
    const k = Number(ev.key);
    const item = controller.state.items[controller.state.focus];
    if (item && k < item.doc.classes.length) {
      void controller.chooseFocused(k);
    }
  } else if (ev.key === "ArrowRight" || ev.key === "Tab") {
    ev.preventDefault();
    controller.setFocus((controller.state.focus + 1) % controller.state.items.length);
  } else if (ev.key === "ArrowLeft") {
    ev.preventDefault();
    const n = controller.state.items.length;
    controller.setFocus((controller.state.focus - 1 + n) % n);
  }
});

async function loop(): Promise<void> {
  await controller.poll();
  setTimeout(loop, controller.state.pollMs);
}

void loop();
