/**
 * Bootstrap: read the service base URL (query parameter `api` or the
 * default local port), fetch model metadata, and mount the studio.
 */

import { ApiClient } from "./api.js";
import { StudioStore } from "./state.js";
import { StudioUi } from "./ui.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("api") ?? "http://127.0.0.1:8700";
  const api = new ApiClient(baseUrl);
  const store = new StudioStore(api);
  const mount = document.getElementById("app")!;

  const model = await api.model();
  const shape = model.example_shape;
  const size: [number, number] =
    shape.length >= 2 ? [shape[0], shape[1]] : [1, shape[0]];
  const ui = new StudioUi(mount, store, api, size);

  const sessionId = params.get("session");
  if (sessionId) {
    await store.attachSession(sessionId);
  }
  ui.render();
}

boot().catch((err) => {
  const mount = document.getElementById("app");
  if (mount) mount.textContent = `failed to start: ${err}`;
});
